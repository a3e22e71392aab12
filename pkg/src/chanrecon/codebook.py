"""
Oversampled DFT PMI codebook and the rate-maximizing quantizer.

Candidate beams are the ``O*K`` oversampled DFT vectors of length ``K``.
Beams ``s, s+O, s+2O, ...`` are mutually orthogonal; every codeword is an
``L``-subset of one such orthogonal group, so each ``K x L`` entry has
orthonormal columns.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .csi_rs import CsiRsObservation

TIE_RTOL = 1e-9


@dataclass(frozen=True)
class PmiCodebook:
    entries: np.ndarray           # (n_entries, K, L)
    oversampling: int
    tag: str = "dft"

    def __post_init__(self):
        if self.entries.ndim != 3 or self.entries.shape[0] == 0:
            raise ValueError("codebook needs a non-empty (n, K, L) entry array")
        self.entries.setflags(write=False)

    def __len__(self):
        return self.entries.shape[0]

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def k_ports(self) -> int:
        return self.entries.shape[1]

    @property
    def layers(self) -> int:
        return self.entries.shape[2]


def build_dft_codebook(k_ports: int, layers: int, oversampling: int = 4) -> PmiCodebook:
    if k_ports < 1 or layers < 1 or oversampling < 1:
        raise ValueError("K, L and O must be positive")
    if layers > k_ports:
        raise ValueError(f"L={layers} exceeds K={k_ports}: no semi-unitary K x L codeword")
    n_beams = oversampling * k_ports
    n = np.arange(k_ports)
    beams = np.exp(2j * np.pi * np.outer(n, np.arange(n_beams)) / n_beams) / np.sqrt(k_ports)
    entries = []
    seen = set()
    for shift in range(oversampling):
        group = shift + oversampling * np.arange(k_ports)
        for cols in combinations(group, layers):
            w, r = np.linalg.qr(beams[:, cols])
            # undo QR's phase freedom so the entry equals the raw beams
            d = np.diag(r)
            w = w * (d / np.abs(d))
            key = tuple(np.round(w, 9).ravel().tolist())
            if key in seen:
                continue
            seen.add(key)
            entries.append(w)
    return PmiCodebook(np.array(entries), oversampling)


def rate_objective(h_uq, w, rho_dl: float) -> float:
    """``log2 det(I_L + (rho_dl/L) W^H H_uq^H H_uq W)`` for one codeword."""
    hw = np.asarray(h_uq) @ w
    layers = w.shape[1]
    m = np.eye(layers) + (rho_dl / layers) * (hw.conj().T @ hw)
    _, logdet = np.linalg.slogdet(m)
    return logdet / np.log(2)


def codebook_objectives(h_uq, cb: PmiCodebook, rho_dl: float) -> np.ndarray:
    """Objective of every codeword at once."""
    hw = np.einsum("mk,nkl->nml", np.asarray(h_uq), cb.entries)
    gram = np.einsum("nml,nmq->nlq", hw.conj(), hw)
    layers = cb.layers
    _, logdet = np.linalg.slogdet(np.eye(layers) + (rho_dl / layers) * gram)
    return logdet / np.log(2)


def quantize(obs, cb: PmiCodebook, rho_dl: float, layers: int | None = None):
    """Exhaustive rate-maximizing PMI search.

    ``obs`` is a :class:`CsiRsObservation` or the raw ``M_UE x K`` matrix.
    Returns ``(index, W)``. Objectives within a relative ``1e-9`` of the best
    are ties and resolve to the smallest index, which matters for square
    unitary codebooks where every entry scores the same.
    """
    h_uq = obs.h_uq if isinstance(obs, CsiRsObservation) else np.asarray(obs)
    if layers is not None and layers != cb.layers:
        raise ValueError(f"codebook holds L={cb.layers} entries, asked for L={layers}")
    if cb.k_ports != h_uq.shape[1]:
        raise ValueError(f"codebook is for K={cb.k_ports} ports, observation has {h_uq.shape[1]}")
    if cb.layers > min(h_uq.shape):
        raise ValueError("L must not exceed min(M_UE, K)")
    obj = codebook_objectives(h_uq, cb, rho_dl)
    best = obj.max()
    idx = int(np.flatnonzero(obj >= best - TIE_RTOL * max(1.0, abs(best)))[0])
    return idx, cb.entries[idx]


def write_codebook(path, cb: PmiCodebook):
    """Text export: a ``# entry i`` line, then ``K`` rows of ``L`` ``re,im`` tokens."""
    lines = [f"# chanrecon-codebook {cb.tag} K={cb.k_ports} L={cb.layers} "
             f"O={cb.oversampling} n={len(cb)}"]
    for i, w in enumerate(cb.entries):
        lines.append(f"# entry {i}")
        lines.extend(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) for row in w)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_codebook(path) -> PmiCodebook:
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = dict(tok.split("=") for tok in lines[0].split()[3:])
    k, l_ = int(head["K"]), int(head["L"])
    rows = [[complex(*map(float, t.split(","))) for t in ln.split()]
            for ln in lines[1:] if ln and not ln.startswith("#")]
    entries = np.array(rows, dtype=complex).reshape(-1, k, l_)
    return PmiCodebook(entries, int(head["O"]), lines[0].split()[1])
