"""
Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(collected again in the terminal summary). Tolerances and runtime budgets
are fixed by the acceptance contract and must not be relaxed.
"""
import itertools
import time

import numpy as np
import pytest

from chanrecon import cli
from chanrecon.angles import AngleGrid, aod_nullproj_ula, aod_nullproj_upa
from chanrecon.arrays import ArrayConfig, ula_response, upa_response
from chanrecon.channel import ClusterConfig, NoiseModel, random_channel, srs_observe
from chanrecon.codebook import build_dft_codebook, quantize
from chanrecon.csi_rs import PortConfig, beamforming_matrix, observe_csi_rs
from chanrecon.evaluation import ks_distance, row_permuted_rates
from chanrecon.experiment import parse_config, run_experiment
from chanrecon.reconstruction import (ReconInput, ReconParams, pinv_reconstruct,
                                      pre_search_reconstruct, ratio_reconstruct)
from chanrecon.solver import RegularizedProblem, solve_irls
from conftest import acceptance_line, crandn, single_path_channel, unquantized_input
from test_solver import grid_search, random_problem

pytestmark = pytest.mark.slow


class Sweep:
    """A preset run once and shared by several criteria."""

    def __init__(self, preset, rho_ul_db=None):
        text = "" if rho_ul_db is None else "[sweep]\nrho_ul_db = " + ", ".join(map(str, rho_ul_db))
        self.cfg = parse_config(text, preset)
        t0 = time.perf_counter()
        self.report = run_experiment(self.cfg)
        self.elapsed = time.perf_counter() - t0
        self.stats = {(s, r): (m, ci) for s, r, m, ci, _ in self.report.aggregate()}

    def gap(self, better, worse, rho):
        """``(mean difference, summed 95% CI half-widths)``."""
        (mb, cb), (mw, cw) = self.stats[(better, rho)], self.stats[(worse, rho)]
        return mb - mw, cb + cw


@pytest.fixture(scope="module")
def fig3():
    return Sweep("fig3")            # ULA, widebeam, L=4, seven uplink SNRs, 200 trials each


@pytest.fixture(scope="module")
def fig4():
    return Sweep("fig4")            # UPA 8x4, widebeam, L=4


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_01_rank_one_exactness():
    t0 = time.perf_counter()
    errs = {}
    cases = [(ArrayConfig.ula(32), (2400,)), (ArrayConfig.upa(8, 4), (120, 70))]
    for arr, aod in cases:
        ch = single_path_channel(arr, aod=aod)
        w, h_srs, p = unquantized_input(ch)
        inp = ReconInput(w, h_srs, p, 1, arr, ReconParams(t_aoa=1, t_aod=1))
        errs[f"ratio-{arr.kind}"] = rel_err(ratio_reconstruct(inp).h_hat, ch.h)
        errs[f"pre-{arr.kind}"] = rel_err(pre_search_reconstruct(inp).h_hat, ch.h)
        errs[f"pinv-{arr.kind}"] = rel_err(pinv_reconstruct(inp).h_hat, ch.h)
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    ok = worst < 1e-6 and elapsed < 5
    acceptance_line(1, "rank-1 exactness", ok,
                    f"max rel. Frobenius error {worst:.2e} (< 1e-6), {elapsed:.2f} s (< 5 s)")
    assert ok, errs


def test_02_row_permutation_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(100):
        arr = ArrayConfig.ula(32) if i % 2 else ArrayConfig.upa(8, 4)
        h = random_channel(ClusterConfig(), arr, 4, rng).h
        for layers in (2, 4):
            for perm in itertools.permutations(range(4)):
                r0, r1 = row_permuted_rates(h, list(perm), 100.0, layers)
                worst = max(worst, abs(r0 - r1))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10
    acceptance_line(2, "row-permutation invariance", ok,
                    f"max |dR| {worst:.2e} bits/s/Hz (< 1e-9), {elapsed:.2f} s (< 10 s)")
    assert ok


def test_03_mtx_insensitivity():
    sweep = Sweep("fig10")          # pinv-upa, UPA 8x4, widebeam, L=4, 0 dB, 500 trials
    cfg = sweep.cfg
    assert (cfg.array, cfg.beam_mode, cfg.layers, cfg.rho_ul_db, cfg.m_tx) == \
        ("upa", "widebeam", 4, (0.0,), 1) and cfg.trials >= 500
    curves = {m: sweep.report.values(f"pinv-upa@mtx{m}") for m in (1, 2, 3, 4)}
    ks = {(a, b): ks_distance(curves[a], curves[b])
          for a, b in itertools.combinations(curves, 2)}
    worst = max(ks.values())
    ok = worst < 0.1 and sweep.elapsed < 300
    acceptance_line(3, "m_tx insensitivity", ok,
                    f"max pairwise KS {worst:.3f} (< 0.1) over {cfg.trials} trials, "
                    f"{sweep.elapsed:.1f} s (< 300 s)")
    assert ok, ks


def test_04_technique_ordering(fig3, fig4):
    rho = 10.0
    checks = []
    for sweep, geom in ((fig3, "ula"), (fig4, "upa")):
        for tech in (f"pre-{geom}", f"pinv-{geom}"):
            checks.append((f"ideal>{tech}[{geom}]", *sweep.gap("ideal", tech, rho)))
            checks.append((f"{tech}>type1[{geom}]", *sweep.gap(tech, "type1", rho)))
    checks.append(("pinv-upa>ratio[upa]", *fig4.gap("pinv-upa", "ratio", rho)))
    elapsed = fig3.elapsed + fig4.elapsed
    failed = [name for name, margin, ci in checks if not margin > ci]
    tight = min(checks, key=lambda c: c[1] - c[2])
    ok = not failed and elapsed < 600
    acceptance_line(4, "technique ordering", ok,
                    f"{len(checks) - len(failed)}/{len(checks)} gaps exceed summed CIs "
                    f"(tightest {tight[0]}: {tight[1]:.2f} > {tight[2]:.2f}), "
                    f"{elapsed:.0f} s for both full sweeps (< 600 s)")
    assert ok, failed


def test_05_geometry_matching(fig4):
    margin, ci = fig4.gap("pinv-upa", "pinv-ula", 10.0)
    ok = margin > ci and fig4.elapsed < 600
    acceptance_line(5, "geometry matching", ok,
                    f"pinv-upa - pinv-ula = {margin:.2f} > CI {ci:.2f} bits/s/Hz, "
                    f"{fig4.elapsed:.0f} s (< 600 s)")
    assert ok


def test_06_snr_monotonicity(fig3, fig4):
    points = (-10.0, 0.0, 10.0, 20.0)
    bad = []
    for sweep, geom in ((fig3, "ula"), (fig4, "upa")):
        for tech in (f"pre-{geom}", f"pinv-{geom}"):
            for lo, hi in zip(points, points[1:]):
                (m0, c0), (m1, c1) = sweep.stats[(tech, lo)], sweep.stats[(tech, hi)]
                # a drop is tolerated only between adjacent points with overlapping CIs
                if m1 < m0 and m0 - m1 > c0 + c1:
                    bad.append((tech, lo, hi))
    drops = sum(1 for sweep, geom in ((fig3, "ula"), (fig4, "upa"))
                for tech in (f"pre-{geom}", f"pinv-{geom}")
                for lo, hi in zip(points, points[1:])
                if sweep.stats[(tech, hi)][0] < sweep.stats[(tech, lo)][0])
    ok = not bad and fig3.elapsed + fig4.elapsed < 600
    acceptance_line(6, "SNR monotonicity", ok,
                    f"{len(bad)} significant drops, {drops} CI-overlapping dips over "
                    f"{{-10, 0, 10, 20}} dB for pre/pinv on ULA and UPA")
    assert ok, bad


def test_07_quantizer():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    arr = ArrayConfig.ula(32)
    mismatches = 0
    books = {layers: build_dft_codebook(4, layers, 4) for layers in (1, 2, 3)}
    for i in range(50):
        layers = 1 + i % 3
        cb = books[layers]
        ch = random_channel(ClusterConfig(), arr, 4, rng)
        h_srs = srs_observe(ch, 1, NoiseModel.from_db(20, 10), rng)
        p = beamforming_matrix("dynamic" if i % 2 else "widebeam", PortConfig(8, 4), h_srs)
        obs = observe_csi_rs(ch, p, NoiseModel.from_db(20), rng)
        idx, _ = quantize(obs, cb, 100.0)
        # independent re-evaluation: plain determinant, one codeword at a time
        best, best_val = None, -np.inf
        for j in range(len(cb)):
            w = cb[j]
            g = w.conj().T @ obs.h_uq.conj().T @ obs.h_uq @ w
            val = np.log2(np.linalg.det(np.eye(layers) + 100.0 / layers * g).real)
            if val > best_val:
                best, best_val = j, val
        mismatches += idx != best
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 30
    acceptance_line(7, "quantizer correctness", ok,
                    f"{50 - mismatches}/50 exact argmax matches, {elapsed:.2f} s (< 30 s)")
    assert ok


def test_08_solver():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_rise = -np.inf
    for _ in range(100):
        prob = random_problem(rng, lam=float(rng.uniform(0.05, 5)))
        _, rep = solve_irls(prob)
        rises = np.diff(rep.trace)
        worst_rise = max(worst_rise, rises.max() if rises.size else -np.inf)
    toy = RegularizedProblem(crandn(rng, 2, 2), crandn(rng, 1, 2), crandn(rng, 2, 2),
                             crandn(rng, 2, 1), crandn(rng, 2, 2), 0, crandn(rng, 2), 0.5)
    x, _ = solve_irls(toy)
    g = np.array(grid_search(toy))
    dev = np.abs(x[:, 0] - g).max()
    elapsed = time.perf_counter() - t0
    ok = worst_rise <= 0 and dev < 1e-3 and elapsed < 60
    acceptance_line(8, "solver validation", ok,
                    f"trace never rises over 100 instances (max step {worst_rise:.1e}), "
                    f"toy vs grid search {dev:.1e} (< 1e-3), {elapsed:.1f} s (< 60 s)")
    assert ok


def test_09_null_space_deflation():
    t0 = time.perf_counter()
    grid = AngleGrid()
    m1, m2 = grid.ula[2400], grid.ula[1200]                # sines 1/2 and -1/2
    a1, a2 = ula_response(32, m1), ula_response(32, m2)
    ula_angles, ula_res = aod_nullproj_ula(a1 + 0.5 * a2, 2, grid, return_residuals=True)
    b1, b2 = upa_response(8, 4, 0.0, 0.0), upa_response(8, 4, 0.0, np.pi / 2)
    upa_angles, upa_res = aod_nullproj_upa(b1 + 0.5 * b2, 2, grid, 8, 4, return_residuals=True)
    in_order = (np.allclose(ula_angles, [m1, m2], atol=1e-12)
                and np.allclose(upa_response(8, 4, *upa_angles[0]), b1, atol=1e-12)
                and np.allclose(upa_response(8, 4, *upa_angles[1]), b2, atol=1e-12))
    ortho = max(abs(np.vdot(a1, ula_res[0])), abs(np.vdot(a2, ula_res[1])),
                abs(np.vdot(b1, upa_res[0])), abs(np.vdot(b2, upa_res[1])))
    elapsed = time.perf_counter() - t0
    ok = in_order and ortho < 1e-9 and elapsed < 30
    acceptance_line(9, "null-space deflation recovery", ok,
                    f"ULA and UPA components recovered strongest first: {in_order}, "
                    f"max |a^H residual| {ortho:.1e} (< 1e-9), {elapsed:.2f} s (< 30 s)")
    assert ok


def _median_time(fn, repeats=60):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def test_10_complexity_budget():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    times = {"ratio": {}, "pinv": {}}
    for n in (32, 64, 128):
        arr = ArrayConfig.ula(n)
        ch = random_channel(ClusterConfig(), arr, 4, rng)
        w, h_srs, p = unquantized_input(ch, j=n // 4)     # K = 4 ports throughout
        inp = ReconInput(w[:, :4], h_srs, p, 1, arr)
        times["ratio"][n] = _median_time(lambda: ratio_reconstruct(inp))
        times["pinv"][n] = _median_time(lambda: pinv_reconstruct(inp))
    r_ratio = times["ratio"][128] / times["ratio"][32]
    r_pinv = times["pinv"][128] / times["pinv"][32]
    r_pinv64 = times["pinv"][64] / times["pinv"][32]
    elapsed = time.perf_counter() - t0
    ok = r_ratio < 6 and r_pinv < 6 and r_pinv64 < 3 and elapsed < 120
    acceptance_line(10, "complexity budget", ok,
                    f"t(128)/t(32): ratio {r_ratio:.2f}, pinv {r_pinv:.2f} (< 6); "
                    f"pinv t(64)/t(32) {r_pinv64:.2f} (< 3), {elapsed:.1f} s (< 120 s)")
    assert ok, times


def test_11_determinism(tmp_path):
    outs = []
    t0 = time.perf_counter()
    for i, threads in enumerate(("1", "2")):
        out = tmp_path / f"run{i}"
        assert cli.main(["run", "--preset", "fig10", "--seed", "11", "--threads", threads,
                         "--out", str(out)]) == 0
        outs.append(out)
    elapsed = time.perf_counter() - t0
    files = ("trials.csv", "summary.csv", "cdf.csv", "summary.dat")
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    ok = same and elapsed < 600
    acceptance_line(11, "determinism", ok,
                    f"fig10 preset twice (1 and 2 threads), CSV outputs byte-identical: "
                    f"{same}, {elapsed:.1f} s")
    assert ok


def test_fig3_wall_clock(fig3):
    n = len(fig3.cfg.rho_ul_db) * fig3.cfg.trials
    ok = fig3.elapsed < 600 and fig3.cfg.trials == 200
    acceptance_line(12, "fig3 preset budget", ok,
                    f"{n} trials (200 per point) in {fig3.elapsed:.0f} s (< 600 s)")
    assert ok
