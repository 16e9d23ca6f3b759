"""Experiment drivers: benchmark records and the three parameter sweeps.

Every trial derives its own generator from (seed, trial key) so sweeps are
reproducible regardless of execution order; ``SPM_THREADS`` > 1 runs trials
in a process pool with results merged in trial order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .driver import SpmConfig, decompose
from .ensembles import (EnsembleSpec, preset, random_subspace_points,
                        symmetric_noise, synth)
from .errors import SpmError
from .power import PowerConfig, run_power, shift_gamma
from .spectral import RankPolicy, SubspaceState
from .tensors import (btd_reconstruct, cp_reconstruct, khatri_rao_power,
                      unflatten_mat)

__all__ = ["BenchRecord", "bench", "sweep_landscape", "sweep_maxrank",
           "sweep_noise", "gpca_scaling", "reconstruction_error",
           "max_workers"]


@dataclass
class BenchRecord:
    ensemble: str
    trial: int
    extract_seconds: float
    power_seconds: float
    deflate_seconds: float
    total_seconds: float
    mean_iterations: float
    restarts: int
    error: float

    FIELDS = ("ensemble", "trial", "extract_seconds", "power_seconds",
              "deflate_seconds", "total_seconds", "mean_iterations",
              "restarts", "error")

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SPM_THREADS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, args_list):
    workers = max_workers()
    if workers > 1 and len(args_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, args_list))
    return [fn(a) for a in args_list]


def reconstruction_error(T: np.ndarray, decomp) -> float:
    """Frobenius distance between T and the reconstructed tensor."""
    if hasattr(decomp, "blocks"):
        return float(np.linalg.norm(T - btd_reconstruct(decomp)))
    return float(np.linalg.norm(T - cp_reconstruct(decomp, T.ndim)))


def bench(ensemble: str, repeat: int = 1, seed: int = 0,
          cfg: SpmConfig | None = None) -> list[BenchRecord]:
    """Decompose a named ensemble ``repeat`` times and record step timings."""
    records = []
    for trial in range(repeat):
        spec = preset(ensemble, seed=seed + trial)
        T, _ = synth(spec)
        run_cfg = cfg if cfg is not None else SpmConfig()
        rng = np.random.default_rng([spec.seed, 0xB])
        if spec.block_dims:
            from .driver import decompose_btd
            d = decompose_btd(T, run_cfg, rng)
        else:
            d = decompose(T, run_cfg, rng)
        s = d.stats
        records.append(BenchRecord(
            ensemble=spec.name, trial=trial,
            extract_seconds=s.extract_seconds, power_seconds=s.power_seconds,
            deflate_seconds=s.deflate_seconds, total_seconds=s.total_seconds,
            mean_iterations=s.mean_iterations, restarts=s.restarts,
            error=reconstruction_error(T, d)))
    return records


# ---------------------------------------------------------------------------
# landscape sweep: single power pass against planted components

def _landscape_trial(args):
    L, n, R, seed, trial = args
    rng = np.random.default_rng([seed, R, trial])
    A = rng.standard_normal((L, R))
    V, _ = np.linalg.qr(khatri_rao_power(A, n))
    state = SubspaceState(V=np.ascontiguousarray(V), C=None, n=n, L=L)
    cfg = PowerConfig(max_restarts=0)
    res = run_power(state, cfg, rng)
    An = A / np.linalg.norm(A, axis=0)
    dist = np.minimum(np.linalg.norm(An - res.x_star[:, None], axis=0),
                      np.linalg.norm(An + res.x_star[:, None], axis=0)).min()
    return float(dist <= 1e-6), res.iterations


def sweep_landscape(L: int, ranks, trials: int, seed: int = 0,
                    n: int = 2) -> list[dict]:
    """Frequency of a single unrestarted power pass landing on a component.

    Components are i.i.d. standard Gaussian (fresh per trial), the start is
    uniform on the sphere; a hit is a converged point within 1e-6 of some
    normalized component up to sign.
    """
    rows = []
    for R in ranks:
        results = _map_trials(_landscape_trial,
                              [(L, n, R, seed, t) for t in range(trials)])
        hits = sum(r[0] for r in results)
        iters = np.mean([r[1] for r in results])
        rows.append({"L": L, "R": R, "trials": trials,
                     "frequency": hits / trials,
                     "mean_iterations": float(iters)})
    return rows


# ---------------------------------------------------------------------------
# maximal-rank sweep: full-pipeline success frequency

def _maxrank_trial(args):
    L, n, R, seed, trial = args
    spec = EnsembleSpec("maxrank", m=2 * n, L=L, R=R, seed=0)
    rng = np.random.default_rng([seed, L, R, trial])
    T, _ = synth(spec, rng)
    try:
        d = decompose(T, SpmConfig(), rng)
    except SpmError:
        return 0.0
    return float(reconstruction_error(T, d) <= 1e-6)


def sweep_maxrank(lengths, ranks, trials: int, seed: int = 0,
                  n: int = 2) -> list[dict]:
    """Success-frequency grid over (length, rank) for the full pipeline."""
    rows = []
    for L in lengths:
        for R in ranks:
            if R > math.comb(L + n - 1, n):
                rows.append({"L": L, "R": R, "trials": trials, "frequency": 0.0})
                continue
            results = _map_trials(_maxrank_trial,
                                  [(L, n, R, seed, t) for t in range(trials)])
            rows.append({"L": L, "R": R, "trials": trials,
                         "frequency": sum(results) / trials})
    return rows


# ---------------------------------------------------------------------------
# noise sweep

def _noise_trial(args):
    L, n, R, sigma, seed, trial = args
    spec = EnsembleSpec("noise", m=2 * n, L=L, R=R,
                        component_dist="gaussian", weight_dist="ones", seed=0)
    rng = np.random.default_rng([seed, trial])
    T, _ = synth(spec, rng)
    noisy = T + symmetric_noise(L, 2 * n, sigma, rng) if sigma > 0 else T
    cfg = SpmConfig(rank_policy=RankPolicy(fixed_rank=R),
                    membership_tol=np.inf, validate=False)
    d = decompose(noisy, cfg, rng)
    return reconstruction_error(T, d)


def sweep_noise(L: int, R: int, sigmas, trials: int, seed: int = 0,
                n: int = 2) -> list[dict]:
    """Decomposition error under symmetric entrywise Gaussian perturbation.

    Components are i.i.d. standard Gaussian with unit weights; the true rank
    is passed as an override and the error is measured against the clean
    tensor.  One noise draw is shared per (sigma, trial) pair.
    """
    rows = []
    for sigma in sigmas:
        errs = _map_trials(_noise_trial,
                           [(L, n, R, sigma, seed, t) for t in range(trials)])
        mean_err = float(np.mean(errs))
        rows.append({"L": L, "R": R, "sigma": sigma, "trials": trials,
                     "mean_error": mean_err,
                     "error_over_sigma": mean_err / sigma if sigma > 0 else 0.0})
    return rows


# ---------------------------------------------------------------------------
# moment-based subspace estimation vs sample count

def gpca_scaling(L: int, dims, counts, sigma: float, seed: int = 0,
                 restarts_small_n: int = 19, restarts_large_n: int = 9) -> list[dict]:
    """Subspace estimation error against sample count on one planted arrangement.

    Draws the arrangement once, then for each N samples a fresh noisy cloud,
    fits with the known noise level, flattening rank and block dimension
    (the knobs a noisy-regime run needs), and records the permutation-minimal
    projector error.  Small clouds get a deeper candidate pool.
    """
    from .gpca import SubspaceArrangement, fit_subspaces, subspace_error
    if len(set(dims)) != 1:
        raise ValueError("this study uses equal block dimensions")
    dim = dims[0]
    rank = len(dims) * math.comb(dim + 1, 2)
    rng = np.random.default_rng([seed, 0x6bca])
    bases = [np.linalg.qr(rng.standard_normal((L, dim)))[0] for _ in dims]
    truth = SubspaceArrangement(bases=bases)
    rows = []
    for N in counts:
        pts, _ = random_subspace_points(bases, int(N), sigma, rng)
        restarts = restarts_small_n if N <= 1000 else restarts_large_n
        cfg = SpmConfig(rank_policy=RankPolicy(fixed_rank=rank),
                        power=PowerConfig(max_restarts=restarts),
                        block_dim=dim, validate=False)
        arr = fit_subspaces(pts, cfg, sigma=sigma,
                            rng=np.random.default_rng([seed, int(N)]))
        rows.append({"N": int(N), "sigma": sigma,
                     "subspace_error": subspace_error(truth, arr)})
    return rows
