"""
Downlink channel reconstruction from a PMI and an SRS column.

Inputs are the fed-back ``K x L`` PMI ``W`` (written ``H_CSI-RS``), the SRS
vector ``h_srs``, the CSI-RS matrix ``P`` and the 1-based transmit antenna
index ``m_tx``. Every technique returns an ``N_BS x L`` estimate whose
``m_tx``-th column is replaced by ``h_srs``. ``W^H`` (``L x K``) plays the role
of the beamformed channel ``H^H P`` throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .angles import AngleGrid, aod_nullproj_ula, aod_nullproj_upa, dominant_aoas
from .arrays import ArrayConfig, HALF_PI, array_matrix, ula_matrix
from .csi_rs import BeamformingMatrix
from .solver import RegularizedProblem, solve_irls

RATIO_DEN_TOL = 1e-12


@dataclass(frozen=True)
class ReconParams:
    lam: float = 0.5
    grid: AngleGrid = field(default_factory=AngleGrid)
    t_aoa: int | None = None          # defaults to L
    t_aod: int | None = None          # defaults to K
    n_random_aoa: int = 20
    n_random_aod: int = 20
    tol: float = 1e-6
    max_iter: int = 200
    pinv_rcond: float = 1e-10
    literal_deflation: bool = False
    literal_ratio: bool = False


@dataclass
class ReconInput:
    h_csirs: np.ndarray               # K x L PMI
    h_srs: np.ndarray                 # N_BS
    p: np.ndarray                     # N_BS x K
    m_tx: int                         # 1-based, 1..L
    bs_array: ArrayConfig             # geometry assumed by the reconstruction
    params: ReconParams = field(default_factory=ReconParams)

    def __post_init__(self):
        if isinstance(self.p, BeamformingMatrix):
            self.p = self.p.p
        self.h_csirs = np.atleast_2d(np.asarray(self.h_csirs, dtype=complex))
        self.h_srs = np.asarray(self.h_srs, dtype=complex).reshape(-1)
        self.p = np.asarray(self.p, dtype=complex)
        n_bs, k = self.p.shape
        if self.h_csirs.shape[0] != k:
            raise ValueError(f"PMI has {self.h_csirs.shape[0]} rows, P has K={k} ports")
        if self.h_srs.size != n_bs:
            raise ValueError(f"h_srs has {self.h_srs.size} entries, P has N_BS={n_bs} rows")
        if self.bs_array.n_elements != n_bs:
            raise ValueError("array geometry does not match N_BS")
        if not 1 <= self.m_tx <= self.layers:
            raise IndexError(f"m_tx={self.m_tx} outside 1..L={self.layers}")

    @property
    def layers(self) -> int:
        return self.h_csirs.shape[1]

    @property
    def n_bs(self) -> int:
        return self.p.shape[0]

    @property
    def k_ports(self) -> int:
        return self.p.shape[1]

    @property
    def t_aoa(self) -> int:
        return self.params.t_aoa or self.layers

    @property
    def t_aod(self) -> int:
        return self.params.t_aod or self.k_ports


@dataclass
class ReconOutput:
    h_hat: np.ndarray
    technique: str
    diagnostics: dict = field(default_factory=dict)


def replace_srs_column(h_hat, h_srs, m_tx: int) -> np.ndarray:
    """Copy of ``h_hat`` with column ``m_tx`` (1-based) set to ``h_srs``."""
    h_hat = np.array(h_hat, dtype=complex)
    if not 1 <= m_tx <= h_hat.shape[1]:
        raise IndexError(f"m_tx={m_tx} outside 1..{h_hat.shape[1]}")
    h_srs = np.asarray(h_srs).reshape(-1)
    if h_srs.size != h_hat.shape[0]:
        raise ValueError("h_srs length does not match the channel's row count")
    h_hat[:, m_tx - 1] = h_srs
    return h_hat


def ratio_reconstruct(inp: ReconInput) -> ReconOutput:
    """Blockwise scaling of ``h_srs`` by PMI entry ratios.

    Block ``k`` of column ``m'`` is ``h_srs[block k] * conj(W^H[m',k] / W^H[m_tx,k])``.
    The conjugate makes the estimate exact for rank-one channels, whose
    columns are proportional; ``params.literal_ratio`` drops it. Ports with a
    vanishing denominator yield a zero block and are listed in
    ``diagnostics["zero_blocks"]``.
    """
    hh = inp.h_csirs.conj().T                       # L x K
    j = inp.n_bs // inp.k_ports
    h_hat = np.zeros((inp.n_bs, inp.layers), dtype=complex)
    zero_blocks = []
    for k in range(inp.k_ports):
        den = hh[inp.m_tx - 1, k]
        if abs(den) < RATIO_DEN_TOL:
            zero_blocks.append(k)
            continue
        ratio = hh[:, k] / den
        if not inp.params.literal_ratio:
            ratio = ratio.conj()
        h_hat[k * j:(k + 1) * j, :] = np.outer(inp.h_srs[k * j:(k + 1) * j], ratio)
    h_hat = replace_srs_column(h_hat, inp.h_srs, inp.m_tx)
    return ReconOutput(h_hat, "ratio", {"zero_blocks": zero_blocks})


def ip_max_reconstruct(inp: ReconInput) -> ReconOutput:
    """Minimum-norm exact fit ``h^H P = W^H[m', :]`` per column.

    The phase/scale-free inner-product problem is attained with zero error
    at unit scale and zero phase; among its solutions the minimum-norm one,
    ``(P^H)^+ W[:, m']``, is returned.
    """
    h_hat = np.linalg.pinv(inp.p.conj().T) @ inp.h_csirs
    h_hat = replace_srs_column(h_hat, inp.h_srs, inp.m_tx)
    return ReconOutput(h_hat, "ip")


def element_problem(inp: ReconInput, lam=None) -> RegularizedProblem:
    """``||Hhat^H P - W^H||_F + lam ||Hhat[:, m_tx] - h_srs||`` with unknown ``X = Hhat^H``."""
    lam = inp.params.lam if lam is None else lam
    return RegularizedProblem(
        left=np.eye(inp.layers), right=inp.p, target=inp.h_csirs.conj().T,
        pen_left=np.eye(inp.n_bs), pen_right=np.eye(inp.layers),
        pen_col=inp.m_tx - 1, pen_target=inp.h_srs, lam=lam)


def element_wise_reconstruct(inp: ReconInput) -> ReconOutput:
    prob = element_problem(inp)
    x, report = solve_irls(prob, inp.params.tol, inp.params.max_iter)
    h_hat = replace_srs_column(x.conj().T, inp.h_srs, inp.m_tx)
    return ReconOutput(h_hat, "element", {"solver": report, "objective": prob.objective(x)})


def gain_problem(inp: ReconInput, a_aoa, a_aod, lam=None) -> RegularizedProblem:
    """Gain-matrix problem for ``Hhat^H = A_AoA C A_AoD^H`` over unknown ``C``."""
    lam = inp.params.lam if lam is None else lam
    return RegularizedProblem(
        left=a_aoa, right=a_aod.conj().T @ inp.p, target=inp.h_csirs.conj().T,
        pen_left=a_aod, pen_right=a_aoa.conj().T,
        pen_col=inp.m_tx - 1, pen_target=inp.h_srs, lam=lam)


def _from_gains(inp, a_aoa, c_hat, a_aod):
    hh = a_aoa @ c_hat @ a_aod.conj().T             # Hhat^H, L x N_BS
    return replace_srs_column(hh.conj().T, inp.h_srs, inp.m_tx)


def structure_reconstruct(inp: ReconInput, rng: np.random.Generator,
                          aoas=None, aods=None) -> ReconOutput:
    """Virtual-channel fit over randomly drawn AoAs/AoDs.

    AoDs are scalars for a ULA and ``(ver, hor)`` pairs for a UPA, following
    ``inp.bs_array``. ``aoas``/``aods`` override the random draw.
    """
    prm = inp.params
    if aoas is None:
        aoas = rng.uniform(-HALF_PI, HALF_PI, prm.n_random_aoa)
    if aods is None:
        shape = prm.n_random_aod if inp.bs_array.kind == "ula" else (prm.n_random_aod, 2)
        aods = rng.uniform(-HALF_PI, HALF_PI, shape)
    a_r = ula_matrix(inp.layers, aoas)
    a_t = array_matrix(inp.bs_array, aods)
    prob = gain_problem(inp, a_r, a_t)
    c_hat, report = solve_irls(prob, prm.tol, prm.max_iter)
    h_hat = _from_gains(inp, a_r, c_hat, a_t)
    return ReconOutput(h_hat, "structure", {
        "aoas": np.asarray(aoas), "aods": np.asarray(aods), "gains": c_hat,
        "solver": report, "objective": prob.objective(c_hat)})


def estimate_angles(inp: ReconInput):
    """Dominant AoAs from the PMI and AoDs from ``h_srs`` under ``inp.bs_array``."""
    prm = inp.params
    aoas = dominant_aoas(inp.h_csirs, prm.grid, inp.t_aoa, inp.layers)
    arr = inp.bs_array
    if arr.kind == "ula":
        aods = aod_nullproj_ula(inp.h_srs, inp.t_aod, prm.grid, literal=prm.literal_deflation)
    else:
        aods = aod_nullproj_upa(inp.h_srs, inp.t_aod, prm.grid, arr.n_ver, arr.n_hor,
                                literal=prm.literal_deflation)
    return aoas, aods


def _steering(inp, aoas, aods):
    return ula_matrix(inp.layers, aoas), array_matrix(inp.bs_array, aods)


def pre_search_reconstruct(inp: ReconInput, angles=None) -> ReconOutput:
    """Gain-matrix fit on pre-estimated dominant angles (solved by IRLS)."""
    aoas, aods = estimate_angles(inp) if angles is None else angles
    a_aoa, a_aod = _steering(inp, aoas, aods)
    prob = gain_problem(inp, a_aoa, a_aod)
    c_hat, report = solve_irls(prob, inp.params.tol, inp.params.max_iter)
    h_hat = _from_gains(inp, a_aoa, c_hat, a_aod)
    return ReconOutput(h_hat, f"pre-{inp.bs_array.kind}", {
        "aoas": aoas, "aods": aods, "gains": c_hat, "solver": report,
        "objective": prob.objective(c_hat)})


def pinv_reconstruct(inp: ReconInput, angles=None) -> ReconOutput:
    """Closed-form gains ``C = A_AoA^+ W^H (A_AoD^H P)^+``.

    Pseudo-inverses drop singular values under ``pinv_rcond * sigma_max``;
    ``diagnostics["rank_deficient"]`` reports when that happened.
    """
    aoas, aods = estimate_angles(inp) if angles is None else angles
    a_aoa, a_aod = _steering(inp, aoas, aods)
    rcond = inp.params.pinv_rcond
    beamformed = a_aod.conj().T @ inp.p             # T_AoD x K
    c_hat = np.linalg.pinv(a_aoa, rcond=rcond) @ inp.h_csirs.conj().T \
        @ np.linalg.pinv(beamformed, rcond=rcond)
    deficient = False
    for m in (a_aoa, beamformed):
        s = np.linalg.svd(m, compute_uv=False)
        deficient |= bool(s[-1] < rcond * s[0])
    h_hat = _from_gains(inp, a_aoa, c_hat, a_aod)
    return ReconOutput(h_hat, f"pinv-{inp.bs_array.kind}", {
        "aoas": aoas, "aods": aods, "gains": c_hat, "rank_deficient": deficient})


TECHNIQUES = ("ratio", "ip", "element", "structure",
              "pre-ula", "pre-upa", "pinv-ula", "pinv-upa")


def reconstruct(name: str, inp: ReconInput, rng=None, upa_shape=None) -> ReconOutput:
    """Run technique ``name``; ``-ula``/``-upa`` fix the array assumed at the BS.

    ``upa_shape`` gives ``(n_ver, n_hor)`` for ``-upa`` techniques when the
    input array is itself a ULA.
    """
    if name not in TECHNIQUES:
        raise ValueError(f"unknown technique {name!r}; choose from {', '.join(TECHNIQUES)}")
    if name == "ratio":
        return ratio_reconstruct(inp)
    if name == "ip":
        return ip_max_reconstruct(inp)
    if name == "element":
        return element_wise_reconstruct(inp)
    if name == "structure":
        if rng is None:
            raise ValueError("the structure technique needs an rng")
        return structure_reconstruct(inp, rng)
    base, geometry = name.split("-")
    if geometry == "ula":
        arr = inp.bs_array.as_ula()
    elif inp.bs_array.kind == "upa":
        arr = inp.bs_array
    elif upa_shape is not None:
        arr = inp.bs_array.as_upa(*upa_shape)
    else:
        raise ValueError(f"{name} on a ULA input needs upa_shape")
    inp = replace(inp, bs_array=arr)
    return pre_search_reconstruct(inp) if base == "pre" else pinv_reconstruct(inp)
