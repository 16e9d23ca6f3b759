"""Method-of-moments generalized PCA on top of the block term decomposition.

Pipeline: empirical second/fourth moments, isotropic-Gaussian noise debiasing
(with the noise level either supplied or estimated from the smallest
symmetric-subspace eigenpair of the flattened fourth moment), block term
decomposition of the debiased fourth moment, and nearest-subspace labeling.

Only fourth moments are implemented; higher moment orders (with the matching
debiasing formulas) are an extension point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .driver import SpmConfig, decompose_btd
from .errors import NumericalError
from .tensors import symmetrize, sym_basis, tensor_power

__all__ = ["SubspaceArrangement", "sample_moment", "debias_moments",
           "estimate_sigma", "fit_subspaces", "classify", "subspace_error",
           "misclassification_error"]

_CHUNK = 4096   # moment accumulation chunk; fixed order keeps sums reproducible


@dataclass
class SubspaceArrangement:
    """Orthonormal bases of the estimated subspaces, plus fit metadata."""

    bases: list[np.ndarray] = field(default_factory=list)
    sigma: float | None = None

    @property
    def dims(self) -> list[int]:
        return [B.shape[1] for B in self.bases]

    def projector(self, i: int) -> np.ndarray:
        B = self.bases[i]
        return B @ B.T


def sample_moment(points: np.ndarray, order: int) -> np.ndarray:
    """Empirical moment tensor ``mean_i y_i^{x order}`` for order 2 or 4."""
    Y = np.asarray(points, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ValueError("points must be a nonempty (N, L) array")
    N, L = Y.shape
    if order == 2:
        return Y.T @ Y / N
    if order == 4:
        acc = np.zeros((L * L, L * L))
        for start in range(0, N, _CHUNK):
            block = Y[start:start + _CHUNK]
            K = (block[:, :, None] * block[:, None, :]).reshape(block.shape[0], L * L)
            acc += K.T @ K
        return (acc / N).reshape(L, L, L, L)
    raise ValueError("only orders 2 and 4 are supported")


def debias_moments(M2: np.ndarray, M4: np.ndarray,
                   sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Remove the isotropic Gaussian noise contribution from both moments.

    ``M2 - sigma^2 I`` and ``M4 - 6 sigma^2 Sym(M2 x I) + 3 sigma^4 Sym(I x I)``;
    the identity map when sigma = 0.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    L = M2.shape[0]
    if sigma == 0.0:
        return M2.copy(), M4.copy()
    eye = np.eye(L)
    M2z = M2 - sigma**2 * eye
    M4z = (M4
           - 6.0 * sigma**2 * symmetrize(np.multiply.outer(M2, eye))
           + 3.0 * sigma**4 * symmetrize(np.multiply.outer(eye, eye)))
    return M2z, M4z


def estimate_sigma(M2: np.ndarray, M4: np.ndarray) -> float:
    """Noise-level estimate from the smallest symmetric eigenpair of mat(M4).

    The flattening of any symmetric tensor annihilates antisymmetric
    directions exactly, so the eigenproblem is restricted to the symmetric
    subspace; on subspace-supported data the restricted flattening is rank
    deficient and the estimate solves the first-order perturbation of its
    smallest eigenvalue.  The discriminant (and the numerator) are floored at
    zero against sampling noise.
    """
    L = M2.shape[0]
    S = sym_basis(L, 2)
    m4 = M4.reshape(L * L, L * L)
    m4 = 0.5 * (m4 + m4.T)
    w, U = np.linalg.eigh(S.T @ m4 @ S)
    lam = float(w[0])
    v = S @ U[:, 0]
    eye = np.eye(L)
    s2 = symmetrize(np.multiply.outer(M2, eye)).reshape(L * L, L * L)
    si = symmetrize(np.multiply.outer(eye, eye)).reshape(L * L, L * L)
    a1 = float(v @ s2 @ v)
    a2 = float(v @ si @ v)
    if a2 <= 1e-14:
        raise NumericalError("degenerate eigenvector: a2 is numerically zero")
    disc = max(a1 * a1 - a2 * lam / 3.0, 0.0)
    return math.sqrt(max(a1 - math.sqrt(disc), 0.0) / a2)


def fit_subspaces(points: np.ndarray, cfg: SpmConfig | None = None,
                  sigma: float | None = None,
                  rng: np.random.Generator | None = None) -> SubspaceArrangement:
    """Estimate a union of subspaces from noisy samples.

    Computes the sample moments, estimates the noise level unless it is
    supplied, debiases, and block-term-decomposes the fourth moment.  Rank
    and block-dimension overrides for the noisy regime travel in ``cfg``.
    """
    if cfg is None:
        cfg = SpmConfig()
    M2 = sample_moment(points, 2)
    M4 = sample_moment(points, 4)
    sig = estimate_sigma(M2, M4) if sigma is None else float(sigma)
    _, M4z = debias_moments(M2, M4, sig)
    decomp = decompose_btd(symmetrize(M4z), cfg, rng)
    return SubspaceArrangement(bases=[b.factor for b in decomp.blocks], sigma=sig)


def classify(points: np.ndarray, arrangement: SubspaceArrangement) -> np.ndarray:
    """Nearest-subspace labels (residual distance); ties go to the lower index."""
    if not arrangement.bases:
        raise ValueError("empty arrangement")
    Y = np.asarray(points, dtype=np.float64)
    sq = np.sum(Y * Y, axis=1)
    resid = np.stack([sq - np.sum((Y @ B) ** 2, axis=1)
                      for B in arrangement.bases], axis=1)
    return np.argmin(resid, axis=1)


def subspace_error(truth: SubspaceArrangement,
                   estimate: SubspaceArrangement) -> float:
    """Permutation-minimal root-sum-square projector distance between arrangements."""
    if len(truth.bases) != len(estimate.bases):
        raise ValueError("arrangements have different subspace counts")
    k = len(truth.bases)
    cost = np.empty((k, k))
    for i in range(k):
        Pi = truth.projector(i)
        for j in range(k):
            cost[i, j] = np.linalg.norm(Pi - estimate.projector(j)) ** 2
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(float(cost[rows, cols].sum()))


def misclassification_error(true_labels: np.ndarray,
                            est_labels: np.ndarray) -> float:
    """Mean label mismatch minimized over global relabelings."""
    t = np.asarray(true_labels)
    e = np.asarray(est_labels)
    if t.shape != e.shape:
        raise ValueError("label arrays must have equal length")
    tv, ti = np.unique(t, return_inverse=True)
    ev, ei = np.unique(e, return_inverse=True)
    counts = np.zeros((tv.size, ev.size))
    np.add.at(counts, (ti, ei), 1)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    matched = counts[rows, cols].sum()
    return 1.0 - float(matched) / t.size
