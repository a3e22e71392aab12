"""
Sum-of-norms regularized least squares.

Every optimization-based reconstruction reduces to

    minimize_X  ||A X B - C||_F  +  lam * ||(D X^H E)[:, m] - f||

over a complex ``p x q`` matrix ``X``. Both terms are norms of affine maps of
``vec(X)``, so the problem is solved by iteratively reweighted least squares
(IRLS) started from the closed-form Tikhonov solution in which both norms are
squared.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS = 1e-8


@dataclass
class RegularizedProblem:
    """Factors of the objective; ``pen_col`` is a 0-based column of ``E``."""

    left: np.ndarray          # A, a x p
    right: np.ndarray         # B, q x b
    target: np.ndarray        # C, a x b
    pen_left: np.ndarray      # D, n x q
    pen_right: np.ndarray     # E, p x c
    pen_col: int
    pen_target: np.ndarray    # f, n
    lam: float = 0.5

    def __post_init__(self):
        self.left = np.atleast_2d(np.asarray(self.left, dtype=complex))
        self.right = np.atleast_2d(np.asarray(self.right, dtype=complex))
        self.target = np.atleast_2d(np.asarray(self.target, dtype=complex))
        self.pen_left = np.atleast_2d(np.asarray(self.pen_left, dtype=complex))
        self.pen_right = np.atleast_2d(np.asarray(self.pen_right, dtype=complex))
        self.pen_target = np.asarray(self.pen_target, dtype=complex).reshape(-1)
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        a, p = self.left.shape
        q, b = self.right.shape
        if self.target.shape != (a, b):
            raise ValueError(f"target is {self.target.shape}, A X B is {(a, b)}")
        n, q2 = self.pen_left.shape
        p2, c = self.pen_right.shape
        if q2 != q or p2 != p:
            raise ValueError("penalty factors do not match the unknown's shape")
        if not 0 <= self.pen_col < c:
            raise IndexError(f"penalty column {self.pen_col} outside 0..{c - 1}")
        if self.pen_target.shape != (n,):
            raise ValueError(f"penalty target has {self.pen_target.size} entries, expected {n}")

    @property
    def shape(self):
        return self.left.shape[1], self.right.shape[0]

    def operators(self):
        """``(M1, c1, M2, c2)`` with both terms written as ``||M x - c||``, ``x = vec(X)``.

        The penalty is conjugated (norm-preserving) so that it is linear in
        ``x``: ``conj(D X^H e) = conj(D) X^T conj(e)``.
        """
        p, q = self.shape
        m1 = np.kron(self.right.T, self.left)
        c1 = self.target.reshape(-1, order="F")
        y = self.pen_right[:, self.pen_col].conj()
        m2 = self.pen_left.conj() @ np.kron(np.eye(q), y[None, :])
        c2 = self.pen_target.conj()
        return m1, c1, m2, c2

    def residuals(self, x):
        x = np.asarray(x)
        data = np.linalg.norm(self.left @ x @ self.right - self.target)
        pen = self.pen_left @ x.conj().T @ self.pen_right[:, self.pen_col] - self.pen_target
        return data, np.linalg.norm(pen)

    def objective(self, x) -> float:
        data, pen = self.residuals(x)
        return data + self.lam * pen


@dataclass
class SolverReport:
    iterations: int
    trace: list = field(default_factory=list)
    converged: bool = False
    tol: float = 0.0
    degenerate: bool = False


def _weighted_lstsq(m1, c1, m2, c2, w1, w2):
    s1, s2 = np.sqrt(w1), np.sqrt(w2)
    stacked = np.vstack([s1 * m1, s2 * m2])
    rhs = np.concatenate([s1 * c1, s2 * c2])
    x, _, rank, _ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return x, rank


def solve_tikhonov(prob: RegularizedProblem):
    """Minimizer of ``||A X B - C||_F^2 + lam ||(D X^H E)[:, m] - f||^2``.

    Rank-deficient systems return the minimum-norm minimizer with
    ``report.degenerate`` set.
    """
    m1, c1, m2, c2 = prob.operators()
    x, rank = _weighted_lstsq(m1, c1, m2, c2, 1.0, prob.lam)
    sol = x.reshape(prob.shape, order="F")
    report = SolverReport(iterations=1, trace=[prob.objective(sol)], converged=True,
                          degenerate=rank < x.size)
    return sol, report


def solve_irls(prob: RegularizedProblem, tol=1e-6, max_iter=200, eps=EPS):
    """Minimize the unsquared objective by IRLS.

    Weights are ``1/max(r_data, eps)`` and ``lam/max(r_pen, eps)``; each step
    minimizes a quadratic majorizer, so the objective trace never increases.
    Stops when the relative objective change drops below ``tol``. On hitting
    ``max_iter`` the best iterate is returned with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    m1, c1, m2, c2 = prob.operators()
    x, rank = _weighted_lstsq(m1, c1, m2, c2, 1.0, prob.lam)
    degenerate = rank < x.size
    obj = prob.objective(x.reshape(prob.shape, order="F"))
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r1 = np.linalg.norm(m1 @ x - c1)
        r2 = np.linalg.norm(m2 @ x - c2)
        x_new, rank = _weighted_lstsq(m1, c1, m2, c2, 1.0 / max(r1, eps),
                                      prob.lam / max(r2, eps))
        obj_new = prob.objective(x_new.reshape(prob.shape, order="F"))
        if obj_new >= obj:
            # no progress left above rounding level; keep the best iterate
            converged = True
            break
        change = obj - obj_new
        x, obj = x_new, obj_new
        degenerate = rank < x.size
        trace.append(obj)
        if change <= tol * max(obj, eps):
            converged = True
            break
    report = SolverReport(iterations=it, trace=trace, converged=converged, tol=tol,
                          degenerate=degenerate)
    return x.reshape(prob.shape, order="F"), report
