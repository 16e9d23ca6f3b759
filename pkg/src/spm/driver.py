"""Top-level decomposition drivers: CP and symmetric block term.

Both follow the same skeleton (extract the subspace once, then repeatedly
find a unit vector maximizing the projection objective and deflate it out)
and differ in what gets deflated: a single rank-1 direction, or the whole
block spanned by the local tangent space at the found point.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .deflate import deflate_btd, deflate_cp
from .errors import (DecompositionError, InconsistentRankError,
                     LocalComponentError, NumericalError, SpmError)
from .power import PowerConfig, ShiftParams, run_power, shift_gamma
from .spectral import RankPolicy, SubspaceState, extract_subspace
from .tensors import (BlockTermDecomposition, Block, CPDecomposition,
                      canonical_sign, kron_power, matrix_to_core,
                      validate_sym_input)

__all__ = ["SpmConfig", "DecomposeStats", "decompose", "decompose_btd",
           "local_component"]


@dataclass
class SpmConfig:
    """Knobs for the decomposition drivers.

    ``membership_tol`` gates acceptance of a power-method output into
    deflation (squared residual; matches the success threshold on f for exact
    inputs; pass ``inf`` for noisy tensors where no candidate can meet it).
    ``null_tol`` is the absolute eigenvalue cutoff of the local-component
    matrix; ``block_dim`` overrides the cutoff with a known block dimension,
    the block analogue of ``rank_policy.fixed_rank``.
    """

    rank_policy: RankPolicy = field(default_factory=RankPolicy)
    power: PowerConfig = field(default_factory=PowerConfig)
    membership_tol: float = 1e-6
    null_tol: float = 1e-8
    block_dim: int | None = None
    adaptive_shift: bool = False
    validate: bool = True

    def __post_init__(self):
        if self.membership_tol <= 0 or self.null_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.block_dim is not None and self.block_dim < 1:
            raise ValueError("block_dim must be >= 1")


@dataclass
class DecomposeStats:
    extract_seconds: float = 0.0
    power_seconds: float = 0.0
    deflate_seconds: float = 0.0
    wall_seconds: float = 0.0          # measured around the whole driver call
    iterations: list[int] = field(default_factory=list)
    restarts: int = 0
    f_histories: list[np.ndarray] = field(default_factory=list)

    @property
    def total_seconds(self) -> float:
        return self.wall_seconds or (self.extract_seconds + self.power_seconds
                                     + self.deflate_seconds)

    @property
    def mean_iterations(self) -> float:
        return float(np.mean(self.iterations)) if self.iterations else 0.0


def _shift_for(cfg: SpmConfig, n: int) -> ShiftParams:
    shift = shift_gamma(n)
    shift.adaptive = cfg.adaptive_shift
    return shift


def decompose(T: np.ndarray, cfg: SpmConfig | None = None,
              rng: np.random.Generator | None = None) -> CPDecomposition:
    """CP decomposition of an even-order symmetric tensor.

    Extracts the subspace once, then alternates power iteration and rank-1
    deflation until the detected rank is exhausted.  Components come back in
    discovery order with unit norm and canonical sign.
    """
    if cfg is None:
        cfg = SpmConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.power.seed)
    if cfg.validate:
        validate_sym_input(T)
    shift = _shift_for(cfg, T.ndim // 2)

    stats = DecomposeStats()
    wall0 = time.perf_counter()
    t0 = time.perf_counter()
    state = extract_subspace(T, cfg.rank_policy)
    stats.extract_seconds = time.perf_counter() - t0

    R = state.r
    weights = np.zeros(R)
    factors = np.zeros((state.L, R))
    for i in range(R):
        try:
            t0 = time.perf_counter()
            result = run_power(state, cfg.power, rng, shift)
            stats.power_seconds += time.perf_counter() - t0
            stats.iterations.append(result.iterations)
            stats.restarts += result.restarts_used
            stats.f_histories.append(result.f_history)

            t0 = time.perf_counter()
            state, lam = deflate_cp(state, result.x_star, cfg.membership_tol)
            stats.deflate_seconds += time.perf_counter() - t0
        except SpmError as exc:
            raise DecompositionError(i, str(exc)) from exc
        a = canonical_sign(result.x_star)
        weights[i] = lam
        factors[:, i] = a
    stats.wall_seconds = time.perf_counter() - wall0
    return CPDecomposition(weights=weights, factors=factors, stats=stats)


def local_component(state: SubspaceState, x_star: np.ndarray,
                    null_tol: float = 1e-8,
                    fixed_dim: int | None = None) -> np.ndarray:
    """Orthonormal basis of the subspace through a converged point.

    Builds the Gram matrix of the gradients of the degree-n equations of the
    extracted variety at ``x_star``, computable from V alone as
    ``I/n + (n-1)/n x x^T - W^T W`` with W the one-mode pullback of the basis
    tensors, and returns the eigenvectors in its (near-)nullspace.  With
    ``fixed_dim`` the smallest ``fixed_dim`` eigenvectors are taken regardless
    of the cutoff.
    """
    n, L, r = state.n, state.L, state.r
    xp = kron_power(x_star, n - 1)
    V3 = state.V.reshape(L ** (n - 1), L, r)
    W = np.tensordot(xp, V3, axes=([0], [0]))      # (L, r)
    M = np.eye(L) / n + ((n - 1) / n) * np.outer(x_star, x_star) - W @ W.T
    w, U = np.linalg.eigh(M)
    if fixed_dim is not None:
        ell = fixed_dim
    else:
        ell = int(np.sum(w <= null_tol))
    if ell == 0:
        raise LocalComponentError(
            f"no eigenvalue of the tangent matrix below {null_tol:.1e} "
            f"(smallest: {w[0]:.3e})")
    A = np.ascontiguousarray(U[:, :ell])
    # containment of x_star; 1e-8 for exact inputs, perturbation-scaled otherwise
    f = 1.0 - float(x_star @ M @ x_star)
    drop = np.linalg.norm(x_star - A @ (A.T @ x_star))
    allowed = max(1e-8, 2.0 * math.sqrt(max(1.0 - f, 0.0) / null_tol))
    if drop > allowed:
        raise LocalComponentError(
            f"converged point is {drop:.3e} outside its tangent basis")
    return A


def _block_residual(state: SubspaceState, A: np.ndarray) -> float:
    from .tensors import star_power
    S = star_power(A, state.n)
    alpha = state.V.T @ S
    total = float(np.sum(S * S))
    return max(total - float(np.sum(alpha * alpha)), 0.0) / total


def decompose_btd(T: np.ndarray, cfg: SpmConfig | None = None,
                  rng: np.random.Generator | None = None) -> BlockTermDecomposition:
    """Symmetric block term decomposition of an even-order symmetric tensor.

    Per block, power-method candidates are drawn one at a time (up to
    ``1 + max_restarts``); a candidate is accepted as soon as its objective
    meets the success threshold and its block lies in the subspace within
    ``membership_tol``, otherwise the candidate with the smallest block
    residual is used (the block-level version of the restart policy).
    Factors come back with orthonormal columns (the core absorbs the gauge).
    """
    if cfg is None:
        cfg = SpmConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.power.seed)
    if cfg.validate:
        validate_sym_input(T)
    n = T.ndim // 2
    shift = _shift_for(cfg, n)
    single = PowerConfig(max_iters=cfg.power.max_iters, step_tol=cfg.power.step_tol,
                         success_threshold=cfg.power.success_threshold,
                         max_restarts=0, seed=cfg.power.seed)

    stats = DecomposeStats()
    wall0 = time.perf_counter()
    t0 = time.perf_counter()
    state = extract_subspace(T, cfg.rank_policy)
    stats.extract_seconds = time.perf_counter() - t0

    decomp = BlockTermDecomposition(stats=stats)
    index = 0
    while state.r > 0:
        try:
            best = None
            last_reject: SpmError | None = None
            for attempt in range(cfg.power.max_restarts + 1):
                t0 = time.perf_counter()
                result = run_power(state, single, rng, shift)
                stats.power_seconds += time.perf_counter() - t0
                stats.iterations.append(result.iterations)
                stats.f_histories.append(result.f_history)
                if attempt > 0:
                    stats.restarts += 1
                try:
                    A = local_component(state, result.x_star, cfg.null_tol,
                                        cfg.block_dim)
                except LocalComponentError as exc:
                    last_reject = exc
                    continue
                K = math.comb(A.shape[1] + n - 1, n)
                if K > state.r:
                    last_reject = InconsistentRankError(
                        f"block needs rank {K} but only {state.r} remains")
                    continue
                resid = _block_residual(state, A)
                if best is None or resid < best[1]:
                    best = (A, resid)
                if result.f_star >= cfg.power.success_threshold \
                        and resid <= cfg.membership_tol:
                    break
            if best is None:
                raise last_reject if last_reject is not None else \
                    InconsistentRankError("no usable block candidate")
            A, _ = best
            K = math.comb(A.shape[1] + n - 1, n)

            t0 = time.perf_counter()
            state, core_matrix = deflate_btd(state, A,
                                             max(cfg.membership_tol, best[1]))
            core = matrix_to_core(core_matrix, A.shape[1], n)
            stats.deflate_seconds += time.perf_counter() - t0
        except SpmError as exc:
            raise DecompositionError(index, str(exc)) from exc
        decomp.blocks.append(Block(factor=A, core=core))
        index += 1
    stats.wall_seconds = time.perf_counter() - wall0
    return decomp
