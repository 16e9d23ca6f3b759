"""The shifted power iteration on the extracted subspace.

One step maps x to ``normalize(y + gamma x)`` where y is the pulled-back
projection from :func:`spm.spectral.project_pull`.  With the default shift the
objective ``f(x) = |P(x^{x n})|^2`` never decreases along the iterates, and the
iteration converges to a constrained critical point; f = 1 certifies a
component of the decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .spectral import SubspaceState, project_pull

__all__ = ["ShiftParams", "PowerConfig", "PowerResult", "shift_gamma",
           "shift_scale", "power_step", "adaptive_step", "run_power",
           "random_unit", "objective"]


@dataclass
class ShiftParams:
    n: int
    gamma: float            # default constant shift, C_n / 2
    C_n: float              # scale entering the adaptive shift
    adaptive: bool = False


@dataclass
class PowerConfig:
    max_iters: int = 5000
    step_tol: float = 1e-13            # on |x_{k+1} - x_k|
    success_threshold: float = 1.0 - 1e-6   # on f
    max_restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if min(self.max_iters, self.step_tol, self.success_threshold) <= 0:
            raise ValueError("config values must be positive")
        if self.success_threshold >= 1.0:
            raise ValueError("success_threshold must be < 1")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")


@dataclass
class PowerResult:
    x_star: np.ndarray
    f_star: float
    iterations: int                    # total over all attempts in this run
    restarts_used: int
    converged: bool                    # returned attempt met step_tol
    f_history: np.ndarray = field(default_factory=lambda: np.zeros(0))


def shift_scale(n: int) -> float:
    """The Hessian-bound scale C_n: sqrt(2(n-1)/n) for n <= 4, else (2-sqrt 2) sqrt(n)."""
    if n <= 4:
        return math.sqrt(2.0 * (n - 1) / n)
    return (2.0 - math.sqrt(2.0)) * math.sqrt(n)


def shift_gamma(n: int) -> ShiftParams:
    """Sufficient constant shift for monotone convergence, gamma = C_n / 2."""
    if n < 2:
        raise ValueError("half-order n must be >= 2")
    C_n = shift_scale(n)
    return ShiftParams(n=n, gamma=0.5 * C_n, C_n=C_n)


def _c_nu(nu: float) -> float:
    """Level-dependent factor of the Hessian bound: sqrt(nu(1-nu)) above 1/2, else 1/2."""
    nu = min(max(nu, 0.0), 1.0)
    return math.sqrt(nu * (1.0 - nu)) if nu > 0.5 else 0.5


def power_step(state: SubspaceState, x: np.ndarray, gamma: float) -> np.ndarray:
    """One shifted step; the denominator cannot vanish for gamma > 0."""
    _, y, _ = project_pull(state, x)
    z = y + gamma * x
    return z / np.linalg.norm(z)


def adaptive_step(state: SubspaceState, x: np.ndarray, params: ShiftParams) -> np.ndarray:
    """Shifted step with gamma recomputed from the current objective value.

    Optional mode with no convergence guarantee; the shift shrinks to zero as
    f approaches 1 (pure power iteration near a component).
    """
    _, y, f = project_pull(state, x)
    gamma_k = _c_nu(f) * params.C_n
    z = y + gamma_k * x
    return z / np.linalg.norm(z)


def objective(state: SubspaceState, x: np.ndarray) -> float:
    """f(x) = squared norm of the projection of x^{x n} onto the subspace."""
    return project_pull(state, x)[2]


def random_unit(L: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the unit sphere via a normalized standard Gaussian."""
    while True:
        g = rng.standard_normal(L)
        nrm = np.linalg.norm(g)
        if nrm > 0:
            return g / nrm


def _one_attempt(state: SubspaceState, cfg: PowerConfig, shift: ShiftParams,
                 rng: np.random.Generator):
    x = random_unit(state.L, rng)
    fhist = []
    hit_tol = False
    iters = 0
    for _ in range(cfg.max_iters):
        g, y, f = project_pull(state, x)
        fhist.append(f)
        if shift.adaptive:
            gamma = _c_nu(f) * shift.C_n
        else:
            gamma = shift.gamma
        z = y + gamma * x
        z /= np.linalg.norm(z)
        iters += 1
        step = np.linalg.norm(z - x)
        x = z
        if step <= cfg.step_tol:
            hit_tol = True
            break
    f_final = objective(state, x)
    fhist.append(f_final)
    return x, f_final, iters, hit_tol, np.array(fhist)


def run_power(state: SubspaceState, cfg: PowerConfig | None = None,
              rng: np.random.Generator | None = None,
              shift: ShiftParams | None = None) -> PowerResult:
    """Run the shifted power iteration with the restart policy.

    Starts from a uniform random unit vector and iterates until the step
    displacement drops below ``step_tol`` or ``max_iters`` is reached.  If the
    final objective is below ``success_threshold``, restarts with a fresh
    initialization up to ``max_restarts`` times; when every attempt falls
    short, the attempt with the highest objective value is returned.
    """
    if state.r < 1:
        raise NumericalError("cannot run the power method on an empty subspace")
    if cfg is None:
        cfg = PowerConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if shift is None:
        shift = shift_gamma(state.n)

    best = None
    total_iters = 0
    restarts = 0
    for attempt in range(cfg.max_restarts + 1):
        x, f, iters, hit_tol, fhist = _one_attempt(state, cfg, shift, rng)
        total_iters += iters
        if best is None or f > best[1]:
            best = (x, f, hit_tol, fhist)
        if f >= cfg.success_threshold:
            break
        if attempt < cfg.max_restarts:
            restarts += 1
    x, f, hit_tol, fhist = best
    return PowerResult(x_star=x, f_star=f, iterations=total_iters,
                       restarts_used=restarts, converged=hit_tol,
                       f_history=fhist)
