"""
Array response (steering) vectors for half-wavelength ULA and UPA geometries.

All responses are unit norm. UPA elements are flattened vertical-major: the
element in vertical row ``v`` and horizontal column ``h`` sits at flat index
``v * n_hor + h``, which is the ordering of ``kron(vertical, horizontal)``.
This flattening is used everywhere a BS-side vector appears (P, h_SRS, H).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HALF_PI = np.pi / 2
_ANGLE_SLACK = 1e-12


class DimensionError(ValueError):
    """Raised for non-positive or inconsistent array dimensions."""


class AngleRangeError(ValueError):
    """Raised when an angle falls outside [-pi/2, pi/2]."""


def check_angle(theta):
    """Return ``theta`` as float(s), rejecting anything outside [-pi/2, pi/2].

    Angles are never wrapped; a wrapped angle would silently alias on a grid.
    """
    arr = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > HALF_PI + _ANGLE_SLACK):
        raise AngleRangeError(f"angle(s) {theta!r} outside [-pi/2, pi/2]")
    return arr


def _check_dim(*dims):
    for d in dims:
        if int(d) != d or d < 1:
            raise DimensionError(f"array dimension must be a positive integer, got {d!r}")


@dataclass(frozen=True)
class ArrayConfig:
    """Antenna array geometry.

    ``kind`` is ``"ula"`` or ``"upa"``. A ULA uses ``n_hor`` elements with
    ``n_ver == 1`` bookkeeping; use the :meth:`ula` / :meth:`upa`
    constructors rather than filling the fields by hand.
    """

    kind: str
    n_ver: int
    n_hor: int

    def __post_init__(self):
        if self.kind not in ("ula", "upa"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        _check_dim(self.n_ver, self.n_hor)
        if self.kind == "ula" and self.n_ver != 1:
            raise DimensionError("a ULA has a single row (n_ver must be 1)")

    @classmethod
    def ula(cls, n: int) -> "ArrayConfig":
        return cls("ula", 1, n)

    @classmethod
    def upa(cls, n_ver: int, n_hor: int) -> "ArrayConfig":
        return cls("upa", n_ver, n_hor)

    @property
    def n_elements(self) -> int:
        return self.n_ver * self.n_hor

    def response(self, angle) -> np.ndarray:
        """Steering vector; ``angle`` is a scalar (ULA) or ``(mu_ver, mu_hor)`` (UPA)."""
        if self.kind == "ula":
            return ula_response(self.n_elements, angle)
        mu_ver, mu_hor = angle
        return upa_response(self.n_ver, self.n_hor, mu_ver, mu_hor)

    def as_ula(self) -> "ArrayConfig":
        """Same element count, treated as one line (the ULA assumption on any BS)."""
        return ArrayConfig.ula(self.n_elements)

    def as_upa(self, n_ver: int, n_hor: int) -> "ArrayConfig":
        if n_ver * n_hor != self.n_elements:
            raise DimensionError(
                f"UPA {n_ver}x{n_hor} does not match {self.n_elements} elements")
        return ArrayConfig.upa(n_ver, n_hor)


def _phase_ramp(n, phase_step):
    return np.exp(1j * np.arange(n) * phase_step)


def ula_response(n: int, theta: float) -> np.ndarray:
    """Unit-norm ULA response: element ``i`` is ``exp(j*i*pi*sin(theta)) / sqrt(n)``."""
    _check_dim(n)
    theta = float(check_angle(theta))
    return _phase_ramp(n, np.pi * np.sin(theta)) / np.sqrt(n)


def upa_response(n_ver: int, n_hor: int, mu_ver: float, mu_hor: float) -> np.ndarray:
    """Unit-norm UPA response, ``kron(vertical, horizontal) / sqrt(n_ver * n_hor)``.

    The vertical phase step is ``pi*sin(mu_ver)``; the horizontal step is
    ``pi*sin(mu_hor)*cos(mu_ver)``.
    """
    _check_dim(n_ver, n_hor)
    mu_ver = float(check_angle(mu_ver))
    mu_hor = float(check_angle(mu_hor))
    ver = _phase_ramp(n_ver, np.pi * np.sin(mu_ver))
    hor = _phase_ramp(n_hor, np.pi * np.sin(mu_hor) * np.cos(mu_ver))
    return np.kron(ver, hor) / np.sqrt(n_ver * n_hor)


def ula_matrix(n: int, thetas) -> np.ndarray:
    """Stack ULA responses column-wise: ``n x len(thetas)``."""
    _check_dim(n)
    thetas = np.atleast_1d(check_angle(thetas))
    return np.exp(1j * np.pi * np.outer(np.arange(n), np.sin(thetas))) / np.sqrt(n)


def upa_matrix(n_ver: int, n_hor: int, mu_ver, mu_hor) -> np.ndarray:
    """Stack UPA responses for paired angle lists: ``(n_ver*n_hor) x len(mu_ver)``."""
    _check_dim(n_ver, n_hor)
    mu_ver = np.atleast_1d(check_angle(mu_ver))
    mu_hor = np.atleast_1d(check_angle(mu_hor))
    if mu_ver.shape != mu_hor.shape:
        raise ValueError("mu_ver and mu_hor must have the same length")
    ver = np.exp(1j * np.pi * np.outer(np.arange(n_ver), np.sin(mu_ver)))
    hor = np.exp(1j * np.pi * np.outer(np.arange(n_hor), np.sin(mu_hor) * np.cos(mu_ver)))
    # column-wise Kronecker product, vertical index slowest
    out = ver[:, None, :] * hor[None, :, :]
    return out.reshape(n_ver * n_hor, -1) / np.sqrt(n_ver * n_hor)


def array_matrix(array: ArrayConfig, angles) -> np.ndarray:
    """Responses of ``array`` for a list of angles (scalars or ``(ver, hor)`` pairs)."""
    if array.kind == "ula":
        return ula_matrix(array.n_elements, np.asarray(angles, dtype=float).reshape(-1))
    pairs = np.asarray(angles, dtype=float).reshape(-1, 2)
    return upa_matrix(array.n_ver, array.n_hor, pairs[:, 0], pairs[:, 1])


@lru_cache(maxsize=16)
def ula_dictionary(n: int, resolution: int) -> np.ndarray:
    """Read-only ULA responses over the ``resolution + 1`` point grid on [-pi/2, pi/2]."""
    grid = angle_grid(resolution)
    dic = ula_matrix(n, grid)
    dic.setflags(write=False)
    return dic


@lru_cache(maxsize=8)
def upa_dictionary(n_ver: int, n_hor: int, res_ver: int, res_hor: int) -> np.ndarray:
    """Read-only UPA responses over the 2-D grid; column ``iv*(res_hor+1) + ih``."""
    gv = angle_grid(res_ver)
    gh = angle_grid(res_hor)
    mv, mh = np.meshgrid(gv, gh, indexing="ij")
    dic = upa_matrix(n_ver, n_hor, mv.ravel(), mh.ravel())
    dic.setflags(write=False)
    return dic


def angle_grid(resolution: int) -> np.ndarray:
    """``resolution + 1`` angles ``-pi/2 + pi*i/resolution`` spanning [-pi/2, pi/2]."""
    _check_dim(resolution)
    grid = -HALF_PI + np.pi * np.arange(resolution + 1) / resolution
    # pin the end point; rounding must not push it past pi/2
    grid[-1] = HALF_PI
    return grid
