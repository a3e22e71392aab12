"""
Geometric cluster channel and the noisy uplink SRS observation.

The downlink channel ``H`` is ``N_BS x M_UE`` and is built as a sum of
outer products ``H^H = sum_l g_l a_r(aoa_l) a_t(aod_l)^H``, with a ULA at the
UE and the BS array from :class:`~chanrecon.arrays.ArrayConfig`. Each
realization is rescaled so that the mean squared entry of ``H`` is exactly one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayConfig, HALF_PI, array_matrix, check_angle, ula_matrix


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|x|^2 = variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass
class PathSet:
    """Multipath parameters.

    ``aods`` has shape ``(n,)`` for a ULA base station and ``(n, 2)`` holding
    ``(aod_ver, aod_hor)`` pairs for a UPA.
    """

    gains: np.ndarray
    aoas: np.ndarray
    aods: np.ndarray

    def __post_init__(self):
        self.gains = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        self.aoas = np.atleast_1d(check_angle(self.aoas))
        self.aods = check_angle(self.aods)
        if self.aods.ndim == 0:
            self.aods = self.aods.reshape(1)
        n = self.gains.shape[0]
        if n == 0:
            raise ValueError("a path set needs at least one path")
        if self.aoas.shape != (n,) or self.aods.shape[0] != n:
            raise ValueError("gains, aoas and aods must describe the same number of paths")

    def __len__(self):
        return self.gains.shape[0]


@dataclass(frozen=True)
class ClusterConfig:
    """Parameters of the cluster generator.

    Cluster centres are uniform on [-pi/2, pi/2] (vertical AoD centres on
    ``[-ver_center_max, ver_center_max]``); each ray is jittered around its
    centre with Gaussian angular noise of standard deviation ``angular_spread``
    and clipped back into range. Cluster powers are exponential and the rays
    of a cluster share its power equally in expectation.
    """

    num_clusters: int = 4
    rays_per_cluster: int = 5
    angular_spread: float = np.deg2rad(2.0)
    ver_center_max: float = np.pi / 4

    def __post_init__(self):
        if self.num_clusters < 1 or self.rays_per_cluster < 1:
            raise ValueError("need at least one cluster and one ray per cluster")
        if self.angular_spread < 0:
            raise ValueError("angular_spread must be non-negative")
        if not 0 <= self.ver_center_max <= HALF_PI:
            raise ValueError("ver_center_max must lie in [0, pi/2]")


@dataclass
class ChannelRealization:
    """True downlink channel ``h`` (``N_BS x M_UE``) and the paths behind it.

    ``normalization`` is the factor the raw outer-product sum was multiplied by.
    """

    h: np.ndarray
    path_set: PathSet
    normalization: float
    bs_array: ArrayConfig

    @property
    def n_bs(self) -> int:
        return self.h.shape[0]

    @property
    def m_ue(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Linear downlink/uplink SNRs; ``None`` or ``inf`` switches a link's noise off."""

    rho_dl: float | None = None
    rho_ul: float | None = None

    def __post_init__(self):
        for name in ("rho_dl", "rho_ul"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be strictly positive, got {val}")

    @classmethod
    def from_db(cls, rho_dl_db=None, rho_ul_db=None) -> "NoiseModel":
        conv = lambda db: None if db is None else 10.0 ** (db / 10.0)
        return cls(conv(rho_dl_db), conv(rho_ul_db))

    @staticmethod
    def _variance(rho):
        if rho is None or np.isinf(rho):
            return 0.0
        return 1.0 / rho

    @property
    def sigma2_dl(self) -> float:
        return self._variance(self.rho_dl)

    @property
    def sigma2_ul(self) -> float:
        return self._variance(self.rho_ul)


def draw_path_set(config: ClusterConfig, bs_array: ArrayConfig,
                  rng: np.random.Generator) -> PathSet:
    """Draw a clustered path set for ``bs_array``."""
    nc, nr = config.num_clusters, config.rays_per_cluster
    n = nc * nr

    def jitter(centres):
        rays = np.repeat(centres, nr) + config.angular_spread * rng.standard_normal(n)
        return np.clip(rays, -HALF_PI, HALF_PI)

    aoa_c = rng.uniform(-HALF_PI, HALF_PI, nc)
    aod_c = rng.uniform(-HALF_PI, HALF_PI, nc)
    powers = rng.exponential(1.0, nc)
    powers /= powers.sum()
    gains = complex_normal(rng, n) * np.sqrt(np.repeat(powers, nr) / nr)
    aoas = jitter(aoa_c)
    if bs_array.kind == "ula":
        aods = jitter(aod_c)
    else:
        ver_c = rng.uniform(-config.ver_center_max, config.ver_center_max, nc)
        aods = np.column_stack([jitter(ver_c), jitter(aod_c)])
    return PathSet(gains, aoas, aods)


def generate_channel(path_set: PathSet, bs_array: ArrayConfig,
                     ue_elements: int) -> ChannelRealization:
    """Build ``H`` from ``path_set`` and scale it to unit mean-square entries."""
    if len(path_set) == 0:
        raise ValueError("empty path set")
    a_r = ula_matrix(ue_elements, path_set.aoas)            # M_UE x n
    a_t = array_matrix(bs_array, path_set.aods)             # N_BS x n
    hh = (a_r * path_set.gains) @ a_t.conj().T              # H^H, M_UE x N_BS
    h = hh.conj().T
    rms = np.sqrt(np.mean(np.abs(h) ** 2))
    if rms == 0:
        raise ValueError("path set produced an all-zero channel")
    scale = 1.0 / rms
    return ChannelRealization(h * scale, path_set, scale, bs_array)


def random_channel(config: ClusterConfig, bs_array: ArrayConfig, ue_elements: int,
                   rng: np.random.Generator) -> ChannelRealization:
    """Draw a path set with ``rng`` and build the normalized channel."""
    return generate_channel(draw_path_set(config, bs_array, rng), bs_array, ue_elements)


def srs_observe(ch: ChannelRealization, m_tx: int, noise: NoiseModel,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Uplink SRS channel ``H(:, m_tx) + v``; ``m_tx`` is 1-based.

    By reciprocity no separate uplink channel exists: at infinite uplink SNR
    the observation is literally a column of ``H``.
    """
    if not 1 <= m_tx <= ch.m_ue:
        raise IndexError(f"m_tx={m_tx} outside 1..{ch.m_ue}")
    col = ch.h[:, m_tx - 1].copy()
    var = noise.sigma2_ul
    if var == 0:
        return col
    if rng is None:
        raise ValueError("a noisy SRS observation needs an rng")
    return col + complex_normal(rng, col.shape, var)


# -- text dump -------------------------------------------------------------

_MAGIC = "# chanrecon-channel v1"


def write_channel(path, ch: ChannelRealization, seed=None):
    """Write ``ch`` as a text file: ``#`` header, then one line per BS antenna
    holding ``M_UE`` space-separated ``re,im`` entries."""
    arr = ch.bs_array
    ps = ch.path_set
    lines = [
        _MAGIC,
        f"# dims {ch.n_bs} {ch.m_ue}",
        f"# seed {'none' if seed is None else int(seed)}",
        f"# array {arr.kind} {arr.n_ver} {arr.n_hor}",
        f"# normalization {float(ch.normalization)!r}",
        f"# paths {len(ps)}",
    ]
    aods = ps.aods.reshape(len(ps), -1)
    for g, aoa, aod in zip(ps.gains, ps.aoas, aods):
        lines.append("# path " + " ".join(repr(float(x)) for x in (g.real, g.imag, aoa, *aod)))
    for row in ch.h:
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_channel(path):
    """Inverse of :func:`write_channel`; returns ``(ChannelRealization, seed)``."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"{path}: not a channel dump")
    header = {}
    paths = []
    rows = []
    for line in lines[1:]:
        if line.startswith("# path "):
            paths.append([float(x) for x in line[7:].split()])
        elif line.startswith("# "):
            key, _, rest = line[2:].partition(" ")
            header[key] = rest.split()
        elif line.strip():
            rows.append([complex(*map(float, tok.split(","))) for tok in line.split()])
    n_bs, m_ue = map(int, header["dims"])
    kind, n_ver, n_hor = header["array"][0], int(header["array"][1]), int(header["array"][2])
    arr = ArrayConfig(kind, n_ver, n_hor)
    p = np.array(paths)
    aods = p[:, 3] if kind == "ula" else p[:, 3:5]
    ps = PathSet(p[:, 0] + 1j * p[:, 1], p[:, 2], aods)
    h = np.array(rows, dtype=complex)
    if h.shape != (n_bs, m_ue):
        raise ValueError(f"{path}: expected {n_bs}x{m_ue} entries, got {h.shape}")
    seed = None if header["seed"][0] == "none" else int(header["seed"][0])
    return ChannelRealization(h, ps, float(header["normalization"][0]), arr), seed
