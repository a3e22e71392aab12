"""
Grid-search angle estimation.

Dominant AoAs come from the fed-back PMI through a spectrum over an
``L``-element ULA; dominant AoDs come from ``h_SRS`` by greedy matched
filtering with orthogonal-projection deflation (ULA or UPA grids).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import angle_grid, ula_dictionary, upa_dictionary

FLAT_RTOL = 1e-9


@dataclass(frozen=True)
class AngleGrid:
    """Grid resolutions; a resolution ``R`` gives ``R + 1`` points on [-pi/2, pi/2]."""

    r_ula: int = 3600
    r_upa_ver: int = 200
    r_upa_hor: int = 200

    def __post_init__(self):
        for r in (self.r_ula, self.r_upa_ver, self.r_upa_hor):
            if int(r) != r or r < 1:
                raise ValueError(f"grid resolution must be a positive integer, got {r!r}")

    @property
    def ula(self) -> np.ndarray:
        return angle_grid(self.r_ula)

    @property
    def ver(self) -> np.ndarray:
        return angle_grid(self.r_upa_ver)

    @property
    def hor(self) -> np.ndarray:
        return angle_grid(self.r_upa_hor)


@dataclass(frozen=True)
class DominantAngles:
    aoas: np.ndarray          # (T_AoA,)
    aods: np.ndarray          # (T_AoD,) for a ULA, (T_AoD, 2) for a UPA


def aoa_spectrum(h_csirs, grid: AngleGrid, layers: int | None = None) -> np.ndarray:
    """``chi(psi_i) = || a(psi_i)^H H_CSI-RS^H ||`` with ``a`` an ``L``-element ULA response."""
    h_csirs = np.asarray(h_csirs)
    layers = h_csirs.shape[1] if layers is None else layers
    if h_csirs.shape[1] != layers:
        raise ValueError(f"PMI has {h_csirs.shape[1]} columns, expected L={layers}")
    dic = ula_dictionary(layers, grid.r_ula)        # L x (R+1)
    # a^H W^H = (W a)^H, so the row norms of (W @ dic) are the spectrum
    return np.linalg.norm(h_csirs @ dic, axis=0)


def find_local_maxima(spectrum, t: int) -> np.ndarray:
    """Up to ``t`` grid indices of local maxima, strongest first.

    A point is a local maximum when it is ``>=`` both neighbours (endpoints
    compare with their single neighbour). Equal values keep index order.
    When fewer than ``t`` local maxima exist the list is padded with the
    strongest remaining grid points.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    x = np.asarray(spectrum, dtype=float)
    is_max = np.ones(x.size, dtype=bool)
    is_max[:-1] &= x[:-1] >= x[1:]
    is_max[1:] &= x[1:] >= x[:-1]
    order = np.argsort(-x, kind="stable")
    peaks = order[is_max[order]]
    if peaks.size >= t:
        return peaks[:t]
    rest = order[~is_max[order]]
    return np.concatenate([peaks, rest[: t - peaks.size]])


def _spread_angles(t: int, grid: np.ndarray) -> np.ndarray:
    # sines -1 + (2i+1)/t give mutually orthogonal t-element ULA responses
    s = -1.0 + (2 * np.arange(t) + 1) / t
    idx = np.abs(np.sin(grid)[:, None] - s[None, :]).argmin(axis=0)
    return grid[idx]


def dominant_aoas(h_csirs, grid: AngleGrid, t: int, layers: int | None = None) -> np.ndarray:
    """``t`` dominant AoAs of a PMI.

    A semi-unitary PMI gives an exactly flat spectrum (``W^H W = I``); local
    maxima of a flat spectrum are rounding noise, so in that case the AoAs
    fall back to ``t`` grid angles with evenly spaced sines, whose responses
    are (near) orthogonal.
    """
    chi = aoa_spectrum(h_csirs, grid, layers)
    top = chi.max()
    if top == 0 or np.ptp(chi) <= FLAT_RTOL * top:
        return _spread_angles(t, grid.ula)
    return grid.ula[find_local_maxima(chi, t)]


def aoa_lookup_table(codebook, grid: AngleGrid, t: int) -> np.ndarray:
    """Precomputed ``(n_entries, t)`` AoAs, one row per codeword."""
    return np.array([dominant_aoas(w, grid, t) for w in codebook.entries])


def _deflate(h, a, literal):
    if literal:
        return h - (h.conj() @ a) * a
    return h - a * (a.conj() @ h)


def _greedy(h, dic, t, literal):
    """Matched-filter peak picking with deflation; returns (indices, residuals)."""
    h = np.asarray(h, dtype=complex).copy()
    picked, residuals = [], []
    for _ in range(t):
        # |a^H h| for every grid column, computed without conjugating the dictionary
        strength = np.abs(h.conj() @ dic)
        i = int(np.argmax(strength))
        picked.append(i)
        h = _deflate(h, dic[:, i], literal)
        residuals.append(h.copy())
    return np.array(picked, dtype=int), residuals


def aod_nullproj_ula(h_srs, t_aod: int, grid: AngleGrid, *, literal=False,
                     return_residuals=False):
    """Dominant ULA AoDs from ``h_srs`` by greedy search with deflation.

    ``literal=True`` deflates with ``h - (h^H a) a`` instead of the orthogonal
    projection ``h - a (a^H h)``; the two differ by a conjugate and only the
    projection removes the recovered component.
    """
    if t_aod < 1:
        raise ValueError("t_aod must be at least 1")
    h_srs = np.asarray(h_srs, dtype=complex).reshape(-1)
    dic = ula_dictionary(h_srs.size, grid.r_ula)
    idx, res = _greedy(h_srs, dic, t_aod, literal)
    angles = grid.ula[idx]
    return (angles, res) if return_residuals else angles


def aod_nullproj_upa(h_srs, t_aod: int, grid: AngleGrid, n_ver: int, n_hor: int, *,
                     literal=False, return_residuals=False):
    """UPA version of :func:`aod_nullproj_ula`; returns ``(t_aod, 2)`` ``(ver, hor)`` pairs."""
    if t_aod < 1:
        raise ValueError("t_aod must be at least 1")
    h_srs = np.asarray(h_srs, dtype=complex).reshape(-1)
    if h_srs.size != n_ver * n_hor:
        raise ValueError(f"h_srs has {h_srs.size} entries, UPA is {n_ver}x{n_hor}")
    dic = upa_dictionary(n_ver, n_hor, grid.r_upa_ver, grid.r_upa_hor)
    idx, res = _greedy(h_srs, dic, t_aod, literal)
    iv, ih = np.divmod(idx, grid.r_upa_hor + 1)
    angles = np.column_stack([grid.ver[iv], grid.hor[ih]])
    return (angles, res) if return_residuals else angles
