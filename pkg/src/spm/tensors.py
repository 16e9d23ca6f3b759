"""Dense symmetric tensors and the multilinear algebra primitives built on them.

Tensors are plain float64 ``numpy`` arrays of shape ``(L,) * m`` in C order, so
the flat layout is lexicographic in the multi-index and every flattening or
vectorization below is a zero-copy reshape.  Symmetric tensors carry no special
storage; :func:`check_symmetric` validates the invariant where it matters.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, permutations

import numpy as np

from .errors import FormatError

__all__ = [
    "CPDecomposition",
    "BlockTermDecomposition",
    "as_tensor",
    "check_symmetric",
    "symmetrize",
    "tensor_power",
    "contract",
    "flatten_mat",
    "unflatten_mat",
    "vectorize",
    "unvectorize",
    "kron_power",
    "khatri_rao_power",
    "star_power",
    "tucker_apply",
    "sorted_multiindices",
    "multiplicity",
    "core_to_matrix",
    "matrix_to_core",
    "cp_reconstruct",
    "btd_reconstruct",
    "sym_basis",
]


# ---------------------------------------------------------------------------
# containers

@dataclass
class CPDecomposition:
    """Weighted unit rank-1 terms: ``sum_i weights[i] * factors[:, i]^{x m}``.

    ``factors`` has one unit-norm column per component, in discovery order,
    with the canonical sign (first nonzero coordinate positive).
    """

    weights: np.ndarray          # (R,)
    factors: np.ndarray          # (L, R), unit columns
    stats: "object | None" = None

    @property
    def rank(self) -> int:
        return self.weights.shape[0]

    @property
    def length(self) -> int:
        return self.factors.shape[0]

    def components(self):
        for i in range(self.rank):
            yield float(self.weights[i]), self.factors[:, i]


@dataclass
class Block:
    """One symmetric Tucker term: factor with orthonormal columns plus core."""

    factor: np.ndarray           # (L, ell), orthonormal columns
    core: np.ndarray             # (ell,) * 2n symmetric

    @property
    def dim(self) -> int:
        return self.factor.shape[1]


@dataclass
class BlockTermDecomposition:
    blocks: list[Block] = field(default_factory=list)
    stats: "object | None" = None

    @property
    def dims(self) -> list[int]:
        return [b.dim for b in self.blocks]


# ---------------------------------------------------------------------------
# basic structure

def as_tensor(data, order: int | None = None, length: int | None = None) -> np.ndarray:
    """Coerce to a float64 C-order tensor of shape ``(L,) * m`` and sanity-check it."""
    T = np.ascontiguousarray(data, dtype=np.float64)
    if order is not None and length is not None:
        T = T.reshape((length,) * order)
    if T.ndim == 0:
        raise ValueError("tensor must have order >= 1")
    L = T.shape[0]
    if T.shape != (L,) * T.ndim:
        raise ValueError(f"tensor modes must have equal length, got shape {T.shape}")
    return T


def check_symmetric(T: np.ndarray, tol: float = 1e-10, samples: int = 64,
                    rng: np.random.Generator | None = None) -> bool:
    """Spot-check index-permutation symmetry on random (index, permutation) pairs.

    The tolerance is absolute, scaled by ``max(1, max|T|)`` over the sampled
    entries so large tensors are not failed on roundoff.
    """
    m = T.ndim
    if m == 1:
        return True
    L = T.shape[0]
    if rng is None:
        rng = np.random.default_rng(0)
    idx = rng.integers(0, L, size=(samples, m))
    scale = 1.0
    worst = 0.0
    for row in idx:
        perm = rng.permutation(m)
        a = T[tuple(row)]
        b = T[tuple(row[perm])]
        scale = max(scale, abs(a))
        worst = max(worst, abs(a - b))
    return worst <= tol * scale


def symmetrize(T: np.ndarray) -> np.ndarray:
    """Average over all index permutations; idempotent on symmetric input."""
    m = T.ndim
    if m == 1:
        return T.copy()
    out = np.zeros_like(T)
    for p in permutations(range(m)):
        out += T.transpose(p)
    out /= math.factorial(m)
    return out


def tensor_power(v: np.ndarray, m: int) -> np.ndarray:
    """m-fold outer power of a vector, entry ``(j_1..j_m) -> prod_t v[j_t]``."""
    if m < 1:
        raise ValueError("order must be >= 1")
    v = np.asarray(v, dtype=np.float64)
    out = v
    for _ in range(m - 1):
        out = np.multiply.outer(out, v)
    return out


def contract(T: np.ndarray, U: np.ndarray):
    """Tensor dot product: sum ``T`` against ``U`` over the first ``U.ndim`` modes.

    Returns an order ``T.ndim - U.ndim`` tensor; a Python float when the
    orders match (Frobenius inner product).
    """
    if U.ndim > T.ndim:
        raise ValueError("second argument may not have higher order")
    if T.shape[0] != U.shape[0]:
        raise ValueError("length mismatch")
    axes = list(range(U.ndim))
    out = np.tensordot(T, U, axes=(axes, axes))
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# flattening / vectorization

def flatten_mat(T: np.ndarray) -> np.ndarray:
    """Square matrix flattening of an even-order tensor (zero-copy reshape)."""
    m = T.ndim
    if m % 2 != 0:
        raise ValueError("square flattening needs even order")
    n = m // 2
    L = T.shape[0]
    return T.reshape(L**n, L**n)


def unflatten_mat(M: np.ndarray, L: int, n: int) -> np.ndarray:
    return M.reshape((L,) * (2 * n))


def vectorize(U: np.ndarray) -> np.ndarray:
    """Lexicographic vectorization (C-order ravel)."""
    return U.reshape(-1)


def unvectorize(v: np.ndarray, L: int, n: int) -> np.ndarray:
    return v.reshape((L,) * n)


def kron_power(x: np.ndarray, n: int) -> np.ndarray:
    """``vec(x^{x n})`` as an L^n vector; n = 0 gives the scalar 1."""
    if n == 0:
        return np.ones(1)
    out = np.asarray(x, dtype=np.float64)
    for _ in range(n - 1):
        out = np.kron(out, x)
    return out


def khatri_rao_power(A: np.ndarray, n: int) -> np.ndarray:
    """Columnwise Kronecker power: column i is ``vec(a_i^{x n})``."""
    if n < 1:
        raise ValueError("power must be >= 1")
    K = np.array(A, dtype=np.float64)
    for _ in range(n - 1):
        K = (K[:, None, :] * A[None, :, :]).reshape(-1, A.shape[1])
    return K


# ---------------------------------------------------------------------------
# sorted multi-indices and the star power

def sorted_multiindices(length: int, n: int) -> list[tuple[int, ...]]:
    """All non-decreasing n-tuples over ``range(length)``, lexicographically."""
    return list(combinations_with_replacement(range(length), n))


def multiplicity(idx: tuple[int, ...]) -> int:
    """Number of distinct orderings of a multi-index: n! / prod(repeats!)."""
    mu = math.factorial(len(idx))
    for c in Counter(idx).values():
        mu //= math.factorial(c)
    return mu


def _sym_product_vec(columns) -> np.ndarray:
    """vec(Sym(c_1 x ... x c_n)) for a list of vectors."""
    perms = set(permutations(range(len(columns))))
    acc = None
    for p in perms:
        term = columns[p[0]]
        for t in p[1:]:
            term = np.kron(term, columns[t])
        acc = term if acc is None else acc + term
    return acc / len(perms)


def star_power(A: np.ndarray, n: int) -> np.ndarray:
    """Symmetrized products of A's columns over sorted multi-indices.

    Column for the multi-index ``(j_1 <= ... <= j_n)`` is
    ``vec(Sym(a_{j_1} x ... x a_{j_n}))``; columns appear in lexicographic
    multi-index order, giving an ``L^n x C(ell+n-1, n)`` matrix.
    """
    if A.shape[1] < 1:
        raise ValueError("factor must have at least one column")
    cols = [_sym_product_vec([A[:, j] for j in I])
            for I in sorted_multiindices(A.shape[1], n)]
    return np.stack(cols, axis=1)


def sym_basis(L: int, n: int) -> np.ndarray:
    """Orthonormal basis of the symmetric subspace of R^{L^n}.

    One column per sorted multi-index I: ``sqrt(mu(I)) * vec(Sym(e_I))``.
    """
    idxs = sorted_multiindices(L, n)
    B = np.zeros((L**n, len(idxs)))
    for c, I in enumerate(idxs):
        perms = set(permutations(I))
        for p in perms:
            flat = 0
            for j in p:
                flat = flat * L + j
            B[flat, c] = 1.0 / len(perms)
        B[:, c] *= math.sqrt(len(perms))
    return B


# ---------------------------------------------------------------------------
# Tucker products and core <-> matrix maps

def tucker_apply(A: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Symmetric Tucker product: apply ``A`` to every mode of ``core``."""
    if A.shape[1] != core.shape[0]:
        raise ValueError("factor columns must match core length")
    out = core
    for _ in range(core.ndim):
        out = np.tensordot(out, A, axes=([0], [1]))
    return np.ascontiguousarray(out)


def core_to_matrix(core: np.ndarray, n: int | None = None) -> np.ndarray:
    """Pack an order-2n core into the K x K matrix of the star-power factorization.

    Entry at sorted multi-indices (I, J) is ``mu(I) * mu(J) * core[I + J]``;
    with this map, ``flatten_mat(tucker_apply(A, core)) ==
    star_power(A, n) @ M @ star_power(A, n).T`` for any factor A.
    """
    if core.ndim % 2 != 0:
        raise ValueError("core must have even order")
    if n is None:
        n = core.ndim // 2
    ell = core.shape[0]
    idxs = sorted_multiindices(ell, n)
    mus = [multiplicity(I) for I in idxs]
    M = np.empty((len(idxs), len(idxs)))
    for a, I in enumerate(idxs):
        for b, J in enumerate(idxs):
            M[a, b] = mus[a] * mus[b] * core[I + J]
    return M


def matrix_to_core(M: np.ndarray, ell: int, n: int) -> np.ndarray:
    """Invert :func:`core_to_matrix`.

    Each sorted 2n-multiset splits into sorted halves (I, J) in several ways;
    on exact inputs all splits agree, otherwise the distinct splits are
    averaged (an unweighted least-squares symmetrization).
    """
    idxs = sorted_multiindices(ell, n)
    pos = {I: i for i, I in enumerate(idxs)}
    core = np.zeros((ell,) * (2 * n))
    for k in combinations_with_replacement(range(ell), 2 * n):
        splits = set()
        for sel in combinations(range(2 * n), n):
            rest = tuple(k[i] for i in range(2 * n) if i not in sel)
            splits.add((tuple(k[i] for i in sel), tuple(sorted(rest))))
        val = float(np.mean([M[pos[I], pos[J]] / (multiplicity(I) * multiplicity(J))
                             for I, J in splits]))
        for p in set(permutations(k)):
            core[p] = val
    return core


# ---------------------------------------------------------------------------
# reconstruction

def cp_reconstruct(decomp: CPDecomposition, m: int) -> np.ndarray:
    """Sum of weighted tensor powers of the components.

    Even orders go through the Khatri-Rao factorization of the flattening,
    which is a single GEMM; odd orders accumulate termwise.
    """
    L = decomp.length
    if decomp.rank == 0:
        return np.zeros((L,) * m)
    lam, A = decomp.weights, decomp.factors
    if m % 2 == 0 and m >= 2:
        K = khatri_rao_power(A, m // 2)
        return unflatten_mat((K * lam) @ K.T, L, m // 2)
    T = np.zeros((L,) * m)
    for i in range(decomp.rank):
        T += lam[i] * tensor_power(A[:, i], m)
    return T


def btd_reconstruct(decomp: BlockTermDecomposition) -> np.ndarray:
    """Sum of the symmetric Tucker products of the blocks."""
    if not decomp.blocks:
        raise ValueError("empty block term decomposition")
    out = tucker_apply(decomp.blocks[0].factor, decomp.blocks[0].core)
    for b in decomp.blocks[1:]:
        out += tucker_apply(b.factor, b.core)
    return out


def canonical_sign(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip sign so the first coordinate that is clearly nonzero is positive."""
    cut = tol * max(1.0, float(np.abs(a).max()))
    for v in a:
        if abs(v) > cut:
            return a if v > 0 else -a
    return a


def validate_sym_input(T: np.ndarray, tol: float = 1e-10) -> None:
    """Raise :class:`FormatError` if a driver input fails the symmetry spot check."""
    if not check_symmetric(T, tol=tol):
        raise FormatError("input tensor is not symmetric within tolerance")
