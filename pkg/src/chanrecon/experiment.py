"""
Configuration, presets and the seeded Monte-Carlo sweep.

Configs are INI files with the sections ``system``, ``channel``,
``codebook``, ``reconstruction`` and ``sweep``. Every key is optional; an
empty file gives the default scenario (ULA of 32 antennas, 4 UE antennas,
8 antennas per port, 4 layers, widebeam CSI-RS).
"""
from __future__ import annotations

import configparser
import hashlib
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .angles import AngleGrid
from .arrays import ArrayConfig
from .channel import ClusterConfig, NoiseModel, random_channel, srs_observe
from .codebook import build_dft_codebook, quantize
from .csi_rs import PortConfig, beamforming_matrix, observe_csi_rs
from .evaluation import (BASELINES, EvalReport, TrialContext, baseline_beamformer,
                         spectral_efficiency, svd_beamformer)
from .reconstruction import TECHNIQUES, ReconInput, ReconParams, reconstruct

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(line or None, message)`` pairs."""

    def __init__(self, errors, path=None):
        self.errors = list(errors)
        self.path = path
        super().__init__("\n".join(self.format_lines()))

    def format_lines(self):
        where = self.path or "<config>"
        return [f"{where}:{ln}: {msg}" if ln else f"{where}: {msg}" for ln, msg in self.errors]


@dataclass(frozen=True)
class ExperimentConfig:
    # system
    array: str = "ula"
    n_bs: int = 32
    n_ver: int = 8
    n_hor: int = 4
    m_ue: int = 4
    j_per_port: int = 8
    layers: int = 4
    beam_mode: str = "widebeam"
    m_tx: int = 1
    # channel
    num_clusters: int = 4
    rays_per_cluster: int = 5
    angular_spread_deg: float = 2.0
    ver_center_max_deg: float = 45.0
    # codebook
    oversampling: int = 4
    # reconstruction
    techniques: tuple = ("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula")
    lam: float = 0.5
    r_ula: int = 3600
    r_upa_ver: int = 200
    r_upa_hor: int = 200
    n_random_aoa: int = 20
    n_random_aod: int = 20
    t_aoa: int = 0                 # 0 means L
    t_aod: int = 0                 # 0 means K
    m_tx_assumed: tuple = ()       # empty means the true m_tx
    literal_deflation: bool = False
    literal_ratio: bool = False
    tol: float = 1e-6
    max_iter: int = 200
    # sweep
    rho_ul_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    rho_dl_db: float = 20.0
    trials: int = 200
    seed: int = 0
    sources: tuple = BASELINES

    @property
    def k_ports(self) -> int:
        return self.n_bs // self.j_per_port

    def bs_array(self) -> ArrayConfig:
        if self.array == "upa":
            return ArrayConfig.upa(self.n_ver, self.n_hor)
        return ArrayConfig.ula(self.n_bs)

    def recon_params(self) -> ReconParams:
        return ReconParams(lam=self.lam, grid=AngleGrid(self.r_ula, self.r_upa_ver, self.r_upa_hor),
                           t_aoa=self.t_aoa or None, t_aod=self.t_aod or None,
                           n_random_aoa=self.n_random_aoa, n_random_aod=self.n_random_aod,
                           tol=self.tol, max_iter=self.max_iter,
                           literal_deflation=self.literal_deflation,
                           literal_ratio=self.literal_ratio)

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(self.num_clusters, self.rays_per_cluster,
                             np.deg2rad(self.angular_spread_deg),
                             np.deg2rad(self.ver_center_max_deg))

    def recon_sources(self):
        """``(source name, technique, assumed m_tx)`` for every reconstruction run."""
        if not self.m_tx_assumed:
            return [(t, t, self.m_tx) for t in self.techniques]
        return [(f"{t}@mtx{m}", t, m) for t in self.techniques for m in self.m_tx_assumed]

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for section, keys in SECTIONS.items():
            cp[section] = {k: _dump(getattr(self, _ATTR.get(k, k))) for k in keys}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]


SECTIONS = {
    "system": ("array", "n_bs", "n_ver", "n_hor", "m_ue", "j_per_port", "layers",
               "beam_mode", "m_tx"),
    "channel": ("num_clusters", "rays_per_cluster", "angular_spread_deg",
                "ver_center_max_deg"),
    "codebook": ("oversampling",),
    "reconstruction": ("techniques", "lambda", "r_ula", "r_upa_ver", "r_upa_hor",
                       "n_random_aoa", "n_random_aod", "t_aoa", "t_aod", "m_tx_assumed",
                       "literal_deflation", "literal_ratio", "tol", "max_iter"),
    "sweep": ("rho_ul_db", "rho_dl_db", "trials", "seed", "sources"),
}
_ATTR = {"lambda": "lam"}           # ini key -> field name
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _dump(v):
    if isinstance(v, tuple):
        return ", ".join(_dump(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) and v.is_integer():
        return repr(v)
    return str(v)


def _parse(kind, raw):
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "str":
        return raw.lower()
    return tuple(x.strip() for x in raw.split(",") if x.strip())


_TUPLE_KINDS = {"techniques": str, "sources": str, "m_tx_assumed": int, "rho_ul_db": float}


def _convert(name, raw):
    if name in _TUPLE_KINDS:
        conv = _TUPLE_KINDS[name]
        return tuple(conv(x.lower() if conv is str else x) for x in _parse("tuple", raw))
    return _parse(_TYPES[name], raw)


PRESETS = {
    "fig3": dict(array="ula", beam_mode="widebeam", layers=4,
                 techniques=("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula")),
    "fig4": dict(array="upa", beam_mode="widebeam", layers=4,
                 techniques=("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula",
                             "pre-upa", "pinv-upa")),
    "fig5": dict(array="ula", beam_mode="dynamic", layers=4,
                 techniques=("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula")),
    "fig6": dict(array="upa", beam_mode="dynamic", layers=4,
                 techniques=("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula",
                             "pre-upa", "pinv-upa")),
    "fig7": dict(array="ula", beam_mode="dynamic", layers=2,
                 techniques=("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula")),
    "fig8": dict(array="upa", beam_mode="dynamic", layers=2,
                 techniques=("ratio", "ip", "element", "structure", "pre-ula", "pinv-ula",
                             "pre-upa", "pinv-upa")),
    "fig9": dict(array="upa", beam_mode="dynamic", layers=2, num_clusters=6,
                 rays_per_cluster=10, angular_spread_deg=4.0,
                 techniques=("ratio", "ip", "pre-upa", "pinv-upa")),
    "fig10": dict(array="upa", beam_mode="widebeam", layers=4, techniques=("pinv-upa",),
                  m_tx_assumed=(1, 2, 3, 4), rho_ul_db=(0.0,), trials=500,
                  sources=("ideal",)),
}


def _key_lines(text):
    """``{(section, key): line number}`` for the raw config text."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            out.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), no)
    return out


def check_config(cfg: ExperimentConfig, lines=None):
    """Every constraint violation as ``(line or None, message)``."""
    lines = lines or {}
    where = {}
    for section, keys in SECTIONS.items():
        for k in keys:
            where[_ATTR.get(k, k)] = lines.get((section, k))
    errs = []

    def bad(names, msg):
        # point at the first involved key that appears in the file
        names = names.split()
        errs.append((next((where[n] for n in names if where.get(n)), None), msg))

    if cfg.array not in ("ula", "upa"):
        bad("array", f"array must be ula or upa, got {cfg.array!r}")
    for name in ("n_bs", "n_ver", "n_hor", "m_ue", "j_per_port", "layers", "num_clusters",
                 "rays_per_cluster", "oversampling", "r_ula", "r_upa_ver", "r_upa_hor",
                 "n_random_aoa", "n_random_aod", "trials", "max_iter"):
        if getattr(cfg, name) < 1:
            bad(name, f"{name} must be at least 1")
    if cfg.j_per_port >= 1 and cfg.n_bs % cfg.j_per_port:
        bad("j_per_port n_bs", "J*K must equal N_BS")
    uses_upa = cfg.array == "upa" or any(t.endswith("-upa") for t in cfg.techniques)
    if uses_upa and cfg.n_ver * cfg.n_hor != cfg.n_bs:
        bad("n_ver n_hor n_bs array", "N_ver*N_hor must equal N_BS")
    if cfg.layers > cfg.m_ue:
        bad("layers m_ue", "L must not exceed M_UE")
    if cfg.j_per_port >= 1 and cfg.layers > cfg.n_bs // cfg.j_per_port:
        bad("layers j_per_port n_bs", "L must not exceed K")
    if cfg.beam_mode not in ("widebeam", "dynamic"):
        bad("beam_mode", f"beam_mode must be widebeam or dynamic, got {cfg.beam_mode!r}")
    if not 1 <= cfg.m_tx <= min(cfg.m_ue, cfg.layers):
        bad("m_tx layers m_ue", "m_tx must lie in 1..min(M_UE, L)")
    for m in cfg.m_tx_assumed:
        if not 1 <= m <= cfg.layers:
            bad("m_tx_assumed", f"assumed m_tx {m} outside 1..L")
    for t in cfg.techniques:
        if t not in TECHNIQUES:
            bad("techniques", f"unknown technique {t!r}")
    for s in cfg.sources:
        if s not in BASELINES:
            bad("sources", f"unknown baseline {s!r}")
    if not cfg.techniques and not cfg.sources:
        bad("techniques", "nothing to evaluate")
    if not cfg.rho_ul_db:
        bad("rho_ul_db", "rho_ul_db needs at least one value")
    if not cfg.lam > 0:
        bad("lam", "lambda must be positive")
    if not cfg.tol > 0:
        bad("tol", "tol must be positive")
    if cfg.t_aoa < 0 or cfg.t_aod < 0:
        bad("t_aoa t_aod", "t_aoa and t_aod must be non-negative")
    if cfg.t_aoa > cfg.layers:
        bad("t_aoa", "t_aoa must not exceed L")
    if cfg.j_per_port >= 1 and cfg.t_aod > cfg.n_bs // cfg.j_per_port:
        bad("t_aod", "t_aod must not exceed K")
    if cfg.angular_spread_deg < 0:
        bad("angular_spread_deg", "angular_spread_deg must be non-negative")
    if not 0 <= cfg.ver_center_max_deg <= 90:
        bad("ver_center_max_deg", "ver_center_max_deg must lie in [0, 90]")
    if cfg.seed < 0:
        bad("seed", "seed must be non-negative")
    return errs


def parse_config(text: str, preset: str | None = None, path=None) -> ExperimentConfig:
    """Resolve ``text`` on top of the defaults (and ``preset``); raise :class:`ConfigError`."""
    errs = []
    base = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError([(None, f"unknown preset {preset!r}; "
                                      f"choose from {', '.join(PRESETS)}")], path)
        base.update(PRESETS[preset])
    lines = _key_lines(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        ln = getattr(exc, "lineno", None)
        raise ConfigError([(ln, str(exc).splitlines()[0])], path) from None
    for section in cp.sections():
        if section.lower() not in SECTIONS:
            errs.append((lines.get((section.lower(), None)), f"unknown section [{section}]"))
            continue
        for key, raw in cp[section].items():
            ln = lines.get((section.lower(), key))
            if key not in SECTIONS[section.lower()]:
                errs.append((ln, f"unknown key {key!r} in [{section}]"))
                continue
            name = _ATTR.get(key, key)
            try:
                base[name] = _convert(name, raw)
            except ValueError as exc:
                errs.append((ln, f"{key}: {exc}"))
    cfg = ExperimentConfig(**base)
    errs.extend(check_config(cfg, lines))
    if errs:
        raise ConfigError(errs, path)
    return cfg


def load_config(path, preset=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), preset, path=str(path))


def validate_config(path, preset=None) -> ExperimentConfig:
    """Alias of :func:`load_config`; raises :class:`ConfigError` listing every problem."""
    return load_config(path, preset)


# -- sweep -----------------------------------------------------------------

def trial_seed(master: int, rho_index: int, trial: int) -> int:
    """Seed of one trial; depends only on its three arguments."""
    ss = np.random.SeedSequence([master, rho_index, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class _Shared:
    """Read-only state shared by worker threads."""

    cfg: ExperimentConfig
    codebook: object
    ports: PortConfig
    bs_array: ArrayConfig
    cluster: ClusterConfig
    params: ReconParams


def _shared(cfg: ExperimentConfig) -> _Shared:
    ports = PortConfig.for_array(cfg.n_bs, cfg.j_per_port)
    return _Shared(cfg, build_dft_codebook(ports.num_ports, cfg.layers, cfg.oversampling),
                   ports, cfg.bs_array(), cfg.cluster_config(), cfg.recon_params())


def simulate_trial(sh: _Shared, rho_ul_db: float, seed: int):
    """Spectral efficiency of every source for one channel draw; pure in ``seed``."""
    cfg = sh.cfg
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]
    rng_ch, rng_srs, rng_dl, rng_rec, rng_base = streams
    noise = NoiseModel.from_db(cfg.rho_dl_db, rho_ul_db)
    rho_dl = noise.rho_dl

    ch = random_channel(sh.cluster, sh.bs_array, cfg.m_ue, rng_ch)
    h_srs = srs_observe(ch, cfg.m_tx, noise, rng_srs)
    p = beamforming_matrix(cfg.beam_mode, sh.ports, h_srs)
    obs = observe_csi_rs(ch, p, noise, rng_dl)
    _, w = quantize(obs, sh.codebook, rho_dl)

    out = {}
    upa_shape = (cfg.n_ver, cfg.n_hor)
    for name, tech, m in cfg.recon_sources():
        inp = ReconInput(w, h_srs, p.p, m, sh.bs_array, sh.params)
        rec = reconstruct(tech, inp, rng_rec, upa_shape=upa_shape)
        f = svd_beamformer(rec.h_hat, cfg.layers)
        out[name] = spectral_efficiency(ch.h, f, rho_dl, cfg.layers)
    ctx = TrialContext(ch.h, obs.h_uq, w, p.p, h_srs, cfg.m_tx, cfg.layers, rng_base)
    for src in cfg.sources:
        f = baseline_beamformer(src, ctx)
        out[src] = spectral_efficiency(ch.h, f, rho_dl, cfg.layers)
    return out


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> EvalReport:
    """All trials at every uplink SNR, merged in (SNR, trial) order."""
    sh = _shared(cfg)
    tasks = [(ri, rho, t, trial_seed(cfg.seed, ri, t))
             for ri, rho in enumerate(cfg.rho_ul_db) for t in range(cfg.trials)]

    def work(task):
        _, rho, _, seed = task
        try:
            return simulate_trial(sh, rho, seed), None
        except Exception as exc:           # one bad trial must not end the sweep
            return None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]

    report = EvalReport(cfg.seed, cfg.fingerprint())
    for (ri, rho, t, seed), (res, err) in zip(tasks, results):
        if err is not None:
            report.failures.append((t, seed, rho, err))
            log.warning("trial %d at rho_ul=%s dB failed: %s", t, rho, err)
            continue
        for src, se in res.items():
            report.add(t, seed, src, rho, cfg.rho_dl_db, cfg.layers, se)
    return report


def write_outputs(report: EvalReport, cfg: ExperimentConfig, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.resolved.ini"), "w") as fh:
        fh.write(f"# fingerprint {cfg.fingerprint()}\n" + cfg.to_ini())
    report.write_trials(os.path.join(out_dir, "trials.csv"))
    report.write_summary(os.path.join(out_dir, "summary.csv"))
    report.write_dat(os.path.join(out_dir, "summary.dat"))
    report.write_cdf(os.path.join(out_dir, "cdf.csv"))
    with open(os.path.join(out_dir, "failures.csv"), "w") as fh:
        fh.write("trial,seed,rho_ul_db,error\n")
        for t, seed, rho, err in report.failures:
            fh.write(f"{t},{seed},{rho!r},\"{err.replace(chr(34), chr(39))}\"\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> EvalReport:
    """Run the sweep and, when ``out_dir`` is given, write every output file there."""
    report = run_sweep(cfg, threads)
    if out_dir is not None:
        write_outputs(report, cfg, out_dir)
    return report


def permutation_experiment(cfg: ExperimentConfig, technique="pinv-upa",
                           m_tx_assumed=(1, 2, 3, 4), threads: int = 1) -> EvalReport:
    """Reconstruct with each assumed transmit antenna while the true one stays ``cfg.m_tx``."""
    cfg = replace(cfg, techniques=(technique,), m_tx_assumed=tuple(m_tx_assumed))
    errs = check_config(cfg)
    if errs:
        raise ConfigError(errs)
    return run_sweep(cfg, threads)
