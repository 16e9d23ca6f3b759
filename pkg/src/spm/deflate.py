"""Rank reduction of the subspace state without re-eigendecomposition.

Removing a found component amounts to a rank-one (or rank-K, for blocks)
update of the flattening's thin factorization.  The update is realized with
Householder reflections so that V is touched once per removed rank unit, and
the inverse eigenvalue matrix is maintained directly as ``C <- O^T C O``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateDeflationError, MembershipError
from .spectral import RankPolicy, SubspaceState, extract_subspace
from .tensors import kron_power, star_power, tensor_power, tucker_apply

__all__ = ["solve_lambda", "solve_block_lambda", "deflate_cp", "deflate_btd",
           "deflate_naive", "householder_pivot_sequence", "apply_reflections"]


def solve_lambda(C: np.ndarray, alpha: np.ndarray) -> float:
    """Unique weight t for which ``D - t alpha alpha^T`` drops rank, from C = D^{-1}."""
    denom = float(alpha @ C @ alpha)
    if abs(denom) < 1e-14:
        raise DegenerateDeflationError("alpha^T C alpha is numerically zero")
    return 1.0 / denom


def solve_block_lambda(C: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Block analogue: the K x K core matrix ``(alpha^T C alpha)^{-1}``."""
    if alpha.ndim == 1:
        alpha = alpha[:, None]
    M = alpha.T @ C @ alpha
    M = 0.5 * (M + M.T)
    if np.linalg.cond(M) > 1e12:
        raise DegenerateDeflationError("alpha^T C alpha is numerically singular")
    out = np.linalg.inv(M)
    return 0.5 * (out + out.T)


def householder_pivot_sequence(M: np.ndarray) -> list[np.ndarray]:
    """Reflections eliminating M (r x K) onto its trailing K coordinates.

    Columns are processed right to left, pivoting on rows r-1, r-2, ...; the
    product ``W = H_1 H_2 ... H_K`` of the returned reflections satisfies
    ``W^T M = [0; lower-triangular]``, so the last K columns of W span
    colspan(M) and the first r-K columns span its orthogonal complement.
    Pivot signs follow the standard cancellation-free choice (the pivot entry
    is reflected onto the opposite sign axis).
    """
    M = np.array(M, dtype=np.float64)
    r, K = M.shape
    vs = []
    for t in range(K):
        col = M[: r - t, K - 1 - t]
        p = r - 1 - t
        nrm = np.linalg.norm(col)
        if nrm == 0.0:
            raise DegenerateDeflationError("rank-deficient deflation direction")
        u = col.copy()
        u[p] += math.copysign(nrm, col[p]) if col[p] != 0.0 else nrm
        v = np.zeros(r)
        v[: p + 1] = u / np.linalg.norm(u)
        vs.append(v)
        M -= 2.0 * np.outer(v, v @ M)
    return vs


def apply_reflections(U: np.ndarray, vs: list[np.ndarray]) -> np.ndarray:
    """Right-multiply by the product of reflections: ``U @ (H_1 H_2 ... H_K)``."""
    out = np.array(U, dtype=np.float64)
    for v in vs:
        out -= 2.0 * np.outer(out @ v, v)
    return out


def _deflate_with_columns(state: SubspaceState, alpha: np.ndarray, K: int):
    """Shared (V, C) update: drop the K directions spanned by C @ alpha."""
    V, C, r = state.V, state.C, state.r
    if C is None:
        raise DegenerateDeflationError("state carries no inverse-eigenvalue matrix")
    vs = householder_pivot_sequence(C @ alpha)
    Vn = apply_reflections(V, vs)[:, : r - K]
    Cw = apply_reflections(apply_reflections(C, vs).T, vs).T   # W^T C W
    Cn = Cw[: r - K, : r - K]
    Cn = 0.5 * (Cn + Cn.T)
    return SubspaceState(V=np.ascontiguousarray(Vn), C=Cn, n=state.n, L=state.L)


def deflate_cp(state: SubspaceState, a: np.ndarray,
               membership_tol: float = 1e-6) -> tuple[SubspaceState, float]:
    """Remove one rank-1 component through ``a``; returns the new state and weight.

    ``a`` must be unit norm and ``vec(a^{x n})`` must lie in the current
    subspace within ``membership_tol`` (squared residual).
    """
    alpha = state.V.T @ kron_power(a, state.n)
    resid = max(1.0 - float(alpha @ alpha), 0.0)
    if resid > membership_tol:
        raise MembershipError(f"component residual {resid:.3e} above tolerance")
    lam = solve_lambda(state.C, alpha)
    new_state = _deflate_with_columns(state, alpha[:, None], 1)
    return new_state, lam


def deflate_btd(state: SubspaceState, A: np.ndarray,
                membership_tol: float = 1e-6) -> tuple[SubspaceState, np.ndarray]:
    """Remove one block through the factor ``A`` (L x ell, full column rank).

    All star-power columns of ``A`` must lie in the current subspace within
    ``membership_tol`` (relative squared residual of the whole column block).
    Returns the new state and the K x K core matrix of the removed block.
    """
    K = math.comb(A.shape[1] + state.n - 1, state.n)
    if K > state.r:
        raise DegenerateDeflationError(
            f"block needs rank {K} but only {state.r} remains")
    S = star_power(A, state.n)
    alpha = state.V.T @ S
    total = float(np.sum(S * S))
    resid = max(total - float(np.sum(alpha * alpha)), 0.0) / total
    if resid > membership_tol:
        raise MembershipError(f"block residual {resid:.3e} above tolerance")
    core_matrix = solve_block_lambda(state.C, alpha)
    new_state = _deflate_with_columns(state, alpha, K)
    return new_state, core_matrix


def deflate_naive(T: np.ndarray, a: np.ndarray = None, weight: float = None,
                  factor: np.ndarray = None, core: np.ndarray = None,
                  policy: RankPolicy | None = None):
    """Reference deflation: subtract the term from T and re-extract.

    Exercised only by tests as the oracle for the Householder updates.
    """
    m = T.ndim
    if a is not None:
        T2 = T - weight * tensor_power(a, m)
    else:
        T2 = T - tucker_apply(factor, core)
    return T2, extract_subspace(T2, policy)
