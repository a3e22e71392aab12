"""
Port-based CSI-RS beamforming and the UE's unquantized effective channel.

``N_BS`` antennas are grouped into ``K`` ports of ``J`` consecutive elements.
Port ``k`` beamforms its CSI-RS with a unit-norm ``J``-vector ``w_k``; the
resulting ``N_BS x K`` matrix ``P`` is block diagonal. The CSI-RS symbols are
fixed to one, so the UE observes ``H^H P + N``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelRealization, NoiseModel, complex_normal

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class PortConfig:
    j_per_port: int
    num_ports: int

    def __post_init__(self):
        if self.j_per_port < 1 or self.num_ports < 1:
            raise ValueError("J and K must be positive")

    @classmethod
    def for_array(cls, n_bs: int, j_per_port: int) -> "PortConfig":
        if j_per_port < 1 or n_bs % j_per_port:
            raise ValueError(f"J*K must equal N_BS (N_BS={n_bs}, J={j_per_port})")
        return cls(j_per_port, n_bs // j_per_port)

    @property
    def n_bs(self) -> int:
        return self.j_per_port * self.num_ports


@dataclass(frozen=True)
class BeamformingMatrix:
    p: np.ndarray
    weights: tuple

    @property
    def j_per_port(self) -> int:
        return len(self.weights[0])

    @property
    def num_ports(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class CsiRsObservation:
    h_uq: np.ndarray          # M_UE x K
    p: BeamformingMatrix


def build_port_matrix(weights) -> BeamformingMatrix:
    """Place ``K`` unit-norm ``J``-vectors on the block diagonal of ``P``."""
    weights = [np.asarray(w, dtype=complex).reshape(-1) for w in weights]
    if not weights:
        raise ValueError("need at least one port weight vector")
    j = weights[0].size
    for k, w in enumerate(weights):
        if w.size != j:
            raise ValueError(f"port {k} weight has length {w.size}, expected {j}")
        if abs(np.linalg.norm(w) - 1.0) > _NORM_TOL:
            raise ValueError(f"port {k} weight is not unit norm (|w|={np.linalg.norm(w)})")
    k_ports = len(weights)
    p = np.zeros((j * k_ports, k_ports), dtype=complex)
    for k, w in enumerate(weights):
        p[k * j:(k + 1) * j, k] = w
    p.setflags(write=False)
    return BeamformingMatrix(p, tuple(weights))


@lru_cache(maxsize=32)
def _widebeam(j, passband_deg, stopband_deg, n_grid):
    theta = np.linspace(-np.pi / 2, np.pi / 2, n_grid)
    u = np.sin(theta)
    passband = np.abs(theta) <= np.deg2rad(passband_deg)
    keep = passband | (np.abs(theta) >= np.deg2rad(stopband_deg))
    steer = np.exp(1j * np.pi * np.outer(u[keep], np.arange(j)))
    # phase reference at the array centre keeps the fitted taper conjugate-symmetric
    target = passband[keep] * np.exp(1j * np.pi * (j - 1) / 2 * u[keep])
    coef, *_ = np.linalg.lstsq(steer, target.astype(complex), rcond=None)
    w = coef.conj()
    return w / np.linalg.norm(w)


def widebeam_weights(j: int, passband_deg=20.0, stopband_deg=30.0, n_grid=3600) -> np.ndarray:
    """Fixed boresight widebeam for a ``J``-element port.

    Least-squares fit of the array factor ``|w^H a(theta)|`` to a flat target
    over ``|theta| <= passband_deg`` and to zero over ``|theta| >= stopband_deg``;
    the transition band is left free. For ``J = 8`` the in-band ripple is about
    2 dB and the sidelobes sit more than 10 dB under the in-band mean.
    """
    if j < 1:
        raise ValueError("J must be positive")
    if j == 1:
        return np.ones(1, dtype=complex)
    return _widebeam(int(j), float(passband_deg), float(stopband_deg), int(n_grid)).copy()


def dft_matrix(j: int) -> np.ndarray:
    """Unitary ``J x J`` DFT matrix, ``D[n, c] = exp(-2j*pi*n*c/J) / sqrt(J)``."""
    n = np.arange(j)
    return np.exp(-2j * np.pi * np.outer(n, n) / j) / np.sqrt(j)


def dynamic_weights(h_srs, j: int):
    """DFT beam best matched to the first ``J`` entries of ``h_srs``.

    Returns ``(w, j_max)`` with ``j_max`` the 0-based DFT column index. Ties
    (e.g. an all-zero ``h_srs``) go to the smallest index.
    """
    h_srs = np.asarray(h_srs, dtype=complex).reshape(-1)
    if h_srs.size < j:
        raise ValueError(f"h_srs has {h_srs.size} entries, need at least J={j}")
    d = dft_matrix(j)
    score = np.abs(d.conj().T @ h_srs[:j])
    j_max = int(np.argmax(score))
    return d[:, j_max].copy(), j_max


def beamforming_matrix(mode: str, ports: PortConfig, h_srs=None) -> BeamformingMatrix:
    """``P`` for ``mode`` in ``{"widebeam", "dynamic"}``; the same ``w`` on every port."""
    if mode == "widebeam":
        w = widebeam_weights(ports.j_per_port)
    elif mode == "dynamic":
        if h_srs is None:
            raise ValueError("dynamic CSI-RS beams need h_srs")
        w, _ = dynamic_weights(h_srs, ports.j_per_port)
    else:
        raise ValueError(f"unknown beam mode {mode!r}")
    return build_port_matrix([w] * ports.num_ports)


def observe_csi_rs(ch: ChannelRealization, p: BeamformingMatrix, noise: NoiseModel,
                   rng: np.random.Generator | None = None) -> CsiRsObservation:
    """Unquantized effective channel ``H^H P + N`` (``M_UE x K``)."""
    if p.p.shape[0] != ch.n_bs:
        raise ValueError(f"P has {p.p.shape[0]} rows, channel has N_BS={ch.n_bs}")
    h_uq = ch.h.conj().T @ p.p
    var = noise.sigma2_dl
    if var > 0:
        if rng is None:
            raise ValueError("a noisy CSI-RS observation needs an rng")
        h_uq = h_uq + complex_normal(rng, h_uq.shape, var)
    return CsiRsObservation(h_uq, p)
