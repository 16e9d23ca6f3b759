"""Subspace extraction from the square flattening, plus projection primitives.

The extracted state is the pair (V, C): orthonormal columns spanning the
column space of the flattening, and C = D^{-1} where D holds the kept
eigenvalues.  Deflation keeps updating (V, C) in place of re-eigendecomposing,
so C is stored as a dense symmetric matrix even though it starts diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensors import flatten_mat, kron_power

__all__ = ["RankPolicy", "SubspaceState", "extract_subspace", "project_pull",
           "membership_residual"]


@dataclass
class RankPolicy:
    """Eigenvalue cutoff for rank detection.

    Keep eigenpairs with ``|d| > relative_tol * max|d|``; ``fixed_rank``
    overrides the count (top eigenvalues by magnitude), for noisy inputs
    where the true rank is known.
    """

    relative_tol: float = 1e-10
    fixed_rank: int | None = None

    def __post_init__(self):
        if self.relative_tol <= 0:
            raise ValueError("relative_tol must be positive")


@dataclass
class SubspaceState:
    """Orthonormal basis V of the extracted subspace with C = D^{-1} bookkeeping.

    Immutable by convention: deflation returns new states.  ``C`` may be None
    for power-iteration-only uses (no deflation possible then).
    """

    V: np.ndarray                 # (L^n, r), orthonormal columns
    C: np.ndarray | None          # (r, r) symmetric, D^{-1}
    n: int
    L: int

    @property
    def r(self) -> int:
        return self.V.shape[1]

    def __post_init__(self):
        self.V.flags.writeable = False
        if self.C is not None:
            self.C.flags.writeable = False


def extract_subspace(T: np.ndarray, policy: RankPolicy | None = None) -> SubspaceState:
    """Thin symmetric eigendecomposition of the flattening with rank detection.

    Eigenpairs are ordered by descending magnitude (eigenvalues of either sign
    are kept: weights may be negative).  A zero tensor yields an r = 0 state.
    """
    if policy is None:
        policy = RankPolicy()
    m = T.ndim
    if m % 2 != 0 or m < 4:
        raise ValueError("tensor order must be even and >= 4")
    n = m // 2
    L = T.shape[0]
    M = flatten_mat(T)
    d, V = np.linalg.eigh(M)
    order = np.argsort(-np.abs(d), kind="stable")
    d, V = d[order], V[:, order]
    if policy.fixed_rank is not None:
        r = min(policy.fixed_rank, d.shape[0])
    else:
        dmax = np.abs(d[0]) if d.shape[0] else 0.0
        r = int(np.sum(np.abs(d) > policy.relative_tol * dmax)) if dmax > 0 else 0
    V = np.ascontiguousarray(V[:, :r])
    C = np.diag(1.0 / d[:r]) if r else np.zeros((0, 0))
    return SubspaceState(V=V, C=C, n=n, L=L)


def project_pull(state: SubspaceState, x: np.ndarray):
    """Project ``x^{x n}`` onto the subspace and pull back one mode.

    Returns ``(g, y, f)`` with ``g = V^T vec(x^{x n})``, ``y`` the contraction
    of the projected tensor against ``x^{x (n-1)}`` and ``f = |g|^2``, the
    squared norm of the projection.  Cost O(r L^n); assumes ``|x| = 1``.
    """
    n, L = state.n, state.L
    xp = kron_power(x, n - 1)
    xn = np.kron(xp, x) if n > 1 else np.asarray(x, dtype=np.float64)
    g = state.V.T @ xn
    w = state.V @ g
    y = w.reshape(L ** (n - 1), L).T @ xp
    return g, y, float(g @ g)


def membership_residual(state: SubspaceState, a: np.ndarray) -> float:
    """Squared distance of ``vec(a^{x n})`` from the subspace, for unit ``a``."""
    g = state.V.T @ kron_power(a, state.n)
    return max(1.0 - float(g @ g), 0.0)
