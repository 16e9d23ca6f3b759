"""Synthetic tensor ensembles for benchmarks and experiments.

A spec names the component distribution, the weight distribution, and the
shape; ``synth`` produces the tensor plus its planted ground truth,
deterministically for a given seed.  The named presets mirror the standard
benchmark tensors (T1..T10); any of their parameters can be overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .tensors import (Block, BlockTermDecomposition, CPDecomposition,
                      btd_reconstruct, canonical_sign, cp_reconstruct,
                      khatri_rao_power, sorted_multiindices, unflatten_mat)

__all__ = ["EnsembleSpec", "PRESETS", "preset", "synth", "synth_cp",
           "synth_btd", "random_symmetric_gaussian", "symmetric_noise",
           "random_subspace_points"]

COMPONENT_DISTS = ("unit-sphere", "gaussian", "mean-shifted-gaussian",
                   "positive-orthant")
WEIGHT_DISTS = ("gaussian", "ones")


@dataclass
class EnsembleSpec:
    name: str
    m: int                                  # tensor order (2n)
    L: int
    R: int = 0                              # CP rank; 0 for block ensembles
    block_dims: tuple[int, ...] = ()        # block ensemble dimensions
    component_dist: str = "unit-sphere"
    weight_dist: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.m < 2 or self.m % 2 != 0:
            raise ValueError("order m must be even and >= 2")
        if bool(self.R) == bool(self.block_dims):
            raise ValueError("specify exactly one of R or block_dims")
        if self.component_dist not in COMPONENT_DISTS:
            raise ValueError(f"unknown component distribution {self.component_dist!r}")
        if self.weight_dist not in WEIGHT_DISTS:
            raise ValueError(f"unknown weight distribution {self.weight_dist!r}")


PRESETS: dict[str, EnsembleSpec] = {
    "T1": EnsembleSpec("T1", m=4, L=40, R=200),
    "T2": EnsembleSpec("T2", m=4, L=40, R=400),
    "T3": EnsembleSpec("T3", m=4, L=40, R=600),
    "T4": EnsembleSpec("T4", m=4, L=60, R=400),
    "T5": EnsembleSpec("T5", m=4, L=80, R=400),
    "T6": EnsembleSpec("T6", m=4, L=40, R=200, component_dist="mean-shifted-gaussian"),
    "T7": EnsembleSpec("T7", m=4, L=40, R=200, component_dist="positive-orthant"),
    "T8": EnsembleSpec("T8", m=4, L=40, block_dims=(3,) * 20 + (2,) * 20),
    "T9": EnsembleSpec("T9", m=6, L=16, R=400),
    "T10": EnsembleSpec("T10", m=6, L=16, block_dims=(3,) * 8 + (2,) * 8),
    # desk-scale analogues used by the acceptance suite
    "T1-desk": EnsembleSpec("T1-desk", m=4, L=10, R=20),
    "T8-desk": EnsembleSpec("T8-desk", m=4, L=16, block_dims=(2,) * 4 + (3,) * 4),
    "T9-desk": EnsembleSpec("T9-desk", m=6, L=10, R=40),
}


_BY_LOWER = {k.lower(): k for k in PRESETS}


def preset(name: str, **overrides) -> EnsembleSpec:
    key = _BY_LOWER.get(name.strip().lower())
    if key is None:
        raise ValueError(f"unknown ensemble {name!r}")
    spec = PRESETS[key]
    return replace(spec, **overrides) if overrides else spec


def _draw_components(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    L, R = spec.L, spec.R
    if spec.component_dist == "unit-sphere":
        A = rng.standard_normal((L, R))
    elif spec.component_dist == "gaussian":
        A = rng.standard_normal((L, R))
        # unnormalized draws; the norm is pushed into the weight below
        return A
    elif spec.component_dist == "mean-shifted-gaussian":
        A = rng.standard_normal((L, R)) + 1.0
    elif spec.component_dist == "positive-orthant":
        A = np.abs(rng.standard_normal((L, R)))
    return A / np.linalg.norm(A, axis=0)


def synth_cp(spec: EnsembleSpec, rng: np.random.Generator | None = None):
    """Planted CP tensor; returns (tensor, CPDecomposition ground truth)."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    A = _draw_components(spec, rng)
    if spec.weight_dist == "gaussian":
        lam = rng.standard_normal(spec.R)
    else:
        lam = np.ones(spec.R)
    norms = np.linalg.norm(A, axis=0)
    A = A / norms
    lam = lam * norms ** spec.m
    A = np.stack([canonical_sign(A[:, i]) for i in range(spec.R)], axis=1)
    truth = CPDecomposition(weights=lam, factors=A)
    n = spec.m // 2
    K = khatri_rao_power(A, n)
    T = unflatten_mat((K * lam) @ K.T, spec.L, n)
    return T, truth


def random_symmetric_gaussian(length: int, order: int,
                              rng: np.random.Generator,
                              scale: float = 1.0) -> np.ndarray:
    """Symmetric tensor with one N(0, scale^2) draw per sorted multi-index."""
    T = np.zeros((length,) * order)
    from itertools import permutations
    for I in sorted_multiindices(length, order):
        v = scale * rng.standard_normal()
        for p in set(permutations(I)):
            T[p] = v
    return T


def symmetric_noise(length: int, order: int, sigma: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Symmetrized entrywise N(0, sigma^2) perturbation of the full array."""
    from .tensors import symmetrize
    return symmetrize(sigma * rng.standard_normal((length,) * order))


def synth_btd(spec: EnsembleSpec, rng: np.random.Generator | None = None):
    """Planted block term tensor; factors are uniform-Grassmannian orthonormal
    frames, cores are symmetric with standard Gaussian entries."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    blocks = []
    for ell in spec.block_dims:
        Q, _ = np.linalg.qr(rng.standard_normal((spec.L, ell)))
        core = random_symmetric_gaussian(ell, spec.m, rng)
        blocks.append(Block(factor=Q, core=core))
    truth = BlockTermDecomposition(blocks=blocks)
    return btd_reconstruct(truth), truth


def synth(spec: EnsembleSpec, rng: np.random.Generator | None = None):
    """Dispatch on the spec: CP ensembles vs block term ensembles."""
    if spec.block_dims:
        return synth_btd(spec, rng)
    return synth_cp(spec, rng)


def random_subspace_points(bases: list[np.ndarray], N: int, sigma: float,
                           rng: np.random.Generator):
    """Equal-weight mixture of standard Gaussians on the given subspaces,
    plus isotropic N(0, sigma^2) ambient noise.  Returns (points, labels)."""
    L = bases[0].shape[0]
    labels = rng.integers(0, len(bases), size=N)
    coeffs = rng.standard_normal((N, max(B.shape[1] for B in bases)))
    pts = np.empty((N, L))
    for i, B in enumerate(bases):
        mask = labels == i
        pts[mask] = coeffs[mask, :B.shape[1]] @ B.T
    if sigma > 0:
        pts = pts + sigma * rng.standard_normal((N, L))
    return pts, labels
