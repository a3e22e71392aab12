"""
Spectral efficiency, SVD beamformers, baselines and result bookkeeping.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import complex_normal

log = logging.getLogger(__name__)

BASELINES = ("ideal", "type1", "type2", "random")
N_CDF_POINTS = 200


def spectral_efficiency(h_true, f, rho_dl: float, layers: int | None = None) -> float:
    """``log2 det(I_L + (rho_dl/L) F^H H H^H F)`` in bits/s/Hz."""
    h_true = np.asarray(h_true)
    f = np.asarray(f)
    layers = f.shape[1] if layers is None else layers
    g = f.conj().T @ h_true                         # L x M_UE
    m = np.eye(f.shape[1]) + (rho_dl / layers) * (g @ g.conj().T)
    _, logdet = np.linalg.slogdet(m)
    return max(0.0, logdet / np.log(2))


def _phase_fix(u):
    """Rotate each column so its first non-negligible entry is real positive."""
    u = u.copy()
    for c in range(u.shape[1]):
        col = u[:, c]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if nz.size:
            z = col[nz[0]]
            u[:, c] = col * (z.conj() / abs(z))
    return u


def svd_beamformer(h_hat, layers: int) -> np.ndarray:
    """Top-``layers`` left singular vectors of ``h_hat`` (right singular vectors of ``h_hat^H``).

    Columns are orthonormal. When ``h_hat`` has fewer than ``layers``
    non-zero singular values the extra columns are an arbitrary orthonormal
    completion from the SVD.
    """
    h_hat = np.asarray(h_hat)
    u, s, _ = np.linalg.svd(h_hat, full_matrices=layers > min(h_hat.shape))
    if s.size < layers or s[layers - 1] <= 1e-12 * max(s[0], 1e-300):
        log.debug("beamformer source has rank < %d; completing the basis", layers)
    return _phase_fix(u[:, :layers])


@dataclass
class TrialContext:
    """What the baselines need from one trial."""

    h: np.ndarray            # true channel, N_BS x M_UE
    h_uq: np.ndarray         # M_UE x K
    w: np.ndarray            # PMI, K x L
    p: np.ndarray            # N_BS x K
    h_srs: np.ndarray
    m_tx: int
    layers: int
    rng: np.random.Generator | None = None


def baseline_beamformer(source: str, ctx: TrialContext) -> np.ndarray:
    """``N_BS x L`` beamformer for a baseline ``source`` in :data:`BASELINES`.

    ``type1`` is ``P W`` (unnormalized); ``type2`` is ``P`` times the top right
    singular vectors of the unquantized effective channel; ``ideal`` uses the
    true channel; ``random`` is the SVD beamformer of an i.i.d. CN(0, 1) matrix
    whose ``m_tx`` column is ``h_srs``.
    """
    if source == "type1":
        return ctx.p @ ctx.w
    if source == "type2":
        _, _, vh = np.linalg.svd(ctx.h_uq)
        return ctx.p @ vh.conj().T[:, :ctx.layers]
    if source == "ideal":
        return svd_beamformer(ctx.h, ctx.layers)
    if source == "random":
        if ctx.rng is None:
            raise ValueError("the random baseline needs an rng")
        m = complex_normal(ctx.rng, (ctx.h.shape[0], ctx.layers))
        m[:, ctx.m_tx - 1] = ctx.h_srs
        return svd_beamformer(m, ctx.layers)
    raise ValueError(f"unknown baseline {source!r}")


def row_permuted_rates(h, perm, rho_dl: float, layers: int):
    """Rates with the SVD beamformer for ``H^H`` and for its rows permuted by ``perm``."""
    h = np.asarray(h)
    h_perm = h[:, perm]                            # rows of H^H are columns of H
    r0 = spectral_efficiency(h, svd_beamformer(h, layers), rho_dl, layers)
    r1 = spectral_efficiency(h_perm, svd_beamformer(h_perm, layers), rho_dl, layers)
    return r0, r1


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())


def mean_ci95(x):
    """Mean and normal-approximation 95% confidence half-width."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()) if x.size else float("nan"), float("nan")
    return float(x.mean()), float(1.96 * x.std(ddof=1) / np.sqrt(x.size))


@dataclass
class EvalReport:
    """Per-trial spectral efficiencies keyed by source, plus run metadata.

    ``records`` rows are ``(trial, seed, source, rho_ul_db, rho_dl_db, L, se)``.
    """

    seed: int
    fingerprint: str = ""
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    TRIAL_COLUMNS = ("trial", "seed", "source", "rho_ul_db", "rho_dl_db", "L",
                     "se_bits_per_hz")
    SUMMARY_COLUMNS = ("source", "rho_ul_db", "mean_se", "ci95_halfwidth", "n_trials")

    def add(self, trial, seed, source, rho_ul_db, rho_dl_db, layers, se):
        if se < 0:
            raise ValueError("spectral efficiency must be non-negative")
        self.records.append((trial, seed, source, rho_ul_db, rho_dl_db, layers, se))

    def sources(self):
        return list(dict.fromkeys(r[2] for r in self.records))

    def rho_ul_values(self):
        return sorted(set(r[3] for r in self.records))

    def values(self, source, rho_ul_db=None) -> np.ndarray:
        return np.array([r[6] for r in self.records
                         if r[2] == source and (rho_ul_db is None or r[3] == rho_ul_db)])

    def aggregate(self):
        rows = []
        for rho in self.rho_ul_values():
            for src in self.sources():
                v = self.values(src, rho)
                if v.size:
                    mean, ci = mean_ci95(v)
                    rows.append((src, rho, mean, ci, int(v.size)))
        return rows

    def cdf(self, source, rho_ul_db=None, n_points=N_CDF_POINTS):
        """``(probabilities, quantiles)`` sampled at ``n_points`` evenly spaced levels."""
        probs = np.linspace(0.0, 1.0, n_points)
        return probs, np.quantile(self.values(source, rho_ul_db), probs)

    def write_trials(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.TRIAL_COLUMNS)
            for r in self.records:
                w.writerow([r[0], r[1], r[2], _fmt(r[3]), _fmt(r[4]), r[5], repr(float(r[6]))])

    def write_summary(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.SUMMARY_COLUMNS)
            for src, rho, mean, ci, n in self.aggregate():
                w.writerow([src, _fmt(rho), repr(mean), repr(ci), n])

    def write_dat(self, path):
        """Gnuplot table: one row per uplink SNR, one mean column per source."""
        sources = self.sources()
        agg = {(s, r): m for s, r, m, _, _ in self.aggregate()}
        with open(path, "w") as fh:
            fh.write("# rho_ul_db " + " ".join(sources) + "\n")
            for rho in self.rho_ul_values():
                vals = [repr(agg.get((s, rho), float("nan"))) for s in sources]
                fh.write(_fmt(rho) + " " + " ".join(vals) + "\n")

    def write_cdf(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("source", "rho_ul_db", "probability", "se_bits_per_hz"))
            for rho in self.rho_ul_values():
                for src in self.sources():
                    if self.values(src, rho).size == 0:
                        continue
                    probs, q = self.cdf(src, rho)
                    for pr, val in zip(probs, q):
                        w.writerow([src, _fmt(rho), repr(float(pr)), repr(float(val))])


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)
