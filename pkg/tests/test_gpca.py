import math

import numpy as np
import pytest

from spm.driver import SpmConfig
from spm.ensembles import random_subspace_points
from spm.errors import NumericalError
from spm.gpca import (SubspaceArrangement, classify, debias_moments,
                      estimate_sigma, fit_subspaces, misclassification_error,
                      sample_moment, subspace_error)
from spm.power import PowerConfig
from spm.tensors import flatten_mat, tensor_power


def arrangement_of(bases):
    return SubspaceArrangement(bases=list(bases))


def random_bases(L, dims, seed):
    rng = np.random.default_rng(seed)
    return [np.linalg.qr(rng.standard_normal((L, d)))[0] for d in dims]


# ---------------------------------------------------------------------------
# moments

def test_sample_moment_single_point():
    y = np.array([[1.0, -2.0, 0.5]])
    assert np.allclose(sample_moment(y, 4), tensor_power(y[0], 4), atol=1e-14)
    assert np.allclose(sample_moment(y, 2), np.outer(y[0], y[0]), atol=1e-14)


def test_sample_moment_sign_symmetric_pair():
    y = np.array([2.0, 1.0])
    pts = np.stack([y, -y])
    assert np.allclose(sample_moment(pts, 4), tensor_power(y, 4), atol=1e-14)
    assert np.allclose(sample_moment(pts, 2), np.outer(y, y), atol=1e-14)


def test_sample_moment_matches_termwise_average():
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((10, 3))
    oracle = sum(tensor_power(Y[i], 4) for i in range(10)) / 10
    assert np.allclose(sample_moment(Y, 4), oracle, atol=1e-13)


def test_sample_moment_rejects_empty_and_bad_order():
    with pytest.raises(ValueError):
        sample_moment(np.zeros((0, 3)), 4)
    with pytest.raises(ValueError):
        sample_moment(np.zeros((5, 3)), 3)


def test_sample_moment_chunking_consistent():
    # more points than one accumulation chunk; oracle sums all points at once
    rng = np.random.default_rng(1)
    Y = rng.standard_normal((10000, 3))
    direct = np.einsum("ni,nj,nk,nl->ijkl", Y, Y, Y, Y) / Y.shape[0]
    M4 = sample_moment(Y, 4)
    assert np.allclose(M4, direct, atol=1e-10)
    assert np.allclose(M4, M4.transpose(1, 0, 3, 2), atol=1e-12)


# ---------------------------------------------------------------------------
# debiasing

def test_debias_zero_sigma_is_identity():
    rng = np.random.default_rng(2)
    Y = rng.standard_normal((50, 4))
    M2, M4 = sample_moment(Y, 2), sample_moment(Y, 4)
    M2z, M4z = debias_moments(M2, M4, 0.0)
    assert np.array_equal(M2z, M2)
    assert np.array_equal(M4z, M4)


def test_debias_kills_pure_noise_moments():
    rng = np.random.default_rng(0)
    sigma = 0.7
    Y = sigma * rng.standard_normal((100000, 4))
    M2, M4 = sample_moment(Y, 2), sample_moment(Y, 4)
    _, M4z = debias_moments(M2, M4, sigma)
    assert np.linalg.norm(M4z) <= 0.05 * np.linalg.norm(M4)


def test_debias_recovers_clean_moments():
    rng = np.random.default_rng(1)
    bases = random_bases(6, (3, 3), seed=3)
    pts, _ = random_subspace_points(bases, 100000, 0.0, rng)
    M4clean = sample_moment(pts, 4)
    noisy = pts + 0.3 * rng.standard_normal(pts.shape)
    M2n, M4n = sample_moment(noisy, 2), sample_moment(noisy, 4)
    _, M4z = debias_moments(M2n, M4n, 0.3)
    rel = np.linalg.norm(M4z - M4clean) / np.linalg.norm(M4clean)
    assert rel <= 0.05


# ---------------------------------------------------------------------------
# noise level estimation

def test_estimate_sigma_clean_data_is_zero():
    rng = np.random.default_rng(4)
    bases = random_bases(6, (2, 2), seed=5)
    pts, _ = random_subspace_points(bases, 2000, 0.0, rng)
    sig = estimate_sigma(sample_moment(pts, 2), sample_moment(pts, 4))
    assert sig <= 1e-6


def test_estimate_sigma_planted_window():
    rng = np.random.default_rng(6)
    bases = random_bases(6, (3, 3), seed=7)
    pts, _ = random_subspace_points(bases, 100000, 0.1, rng)
    sig = estimate_sigma(sample_moment(pts, 2), sample_moment(pts, 4))
    assert 0.08 <= sig <= 0.12


def test_estimate_sigma_degree_one_homogeneous():
    rng = np.random.default_rng(8)
    bases = random_bases(6, (3, 3), seed=9)
    pts, _ = random_subspace_points(bases, 50000, 0.1, rng)
    s1 = estimate_sigma(sample_moment(pts, 2), sample_moment(pts, 4))
    s10 = estimate_sigma(sample_moment(10 * pts, 2), sample_moment(10 * pts, 4))
    assert s10 == pytest.approx(10.0 * s1, rel=1e-8)


# ---------------------------------------------------------------------------
# fitting and classification

def test_fit_subspaces_noiseless():
    rng = np.random.default_rng(10)
    bases = random_bases(6, (2, 2), seed=11)
    pts, labels = random_subspace_points(bases, 2000, 0.0, rng)
    arr = fit_subspaces(pts, SpmConfig(power=PowerConfig(seed=12)), rng=rng)
    assert arr.sigma <= 1e-6
    assert subspace_error(arrangement_of(bases), arr) <= 1e-3
    est = classify(pts, arr)
    assert misclassification_error(labels, est) == 0.0


def test_fit_single_subspace():
    rng = np.random.default_rng(13)
    bases = random_bases(5, (2,), seed=14)
    pts, _ = random_subspace_points(bases, 1500, 0.0, rng)
    arr = fit_subspaces(pts, SpmConfig(power=PowerConfig(seed=15)), rng=rng)
    assert len(arr.bases) == 1
    assert subspace_error(arrangement_of(bases), arr) <= 1e-6


def test_classify_point_inside_subspace():
    bases = [np.eye(4)[:, :2], np.eye(4)[:, 2:]]
    arr = arrangement_of(bases)
    pts = np.array([[1.0, 2.0, 0.0, 0.0],
                    [0.0, 0.0, -1.0, 3.0]])
    assert classify(pts, arr).tolist() == [0, 1]


def test_classify_tie_goes_to_lower_index():
    bases = [np.eye(2)[:, :1], np.eye(2)[:, 1:]]
    arr = arrangement_of(bases)
    pts = np.array([[1.0, 1.0]])
    assert classify(pts, arr).tolist() == [0]


def test_classify_basis_invariant():
    rng = np.random.default_rng(16)
    B = np.linalg.qr(rng.standard_normal((5, 2)))[0]
    Q = np.linalg.qr(rng.standard_normal((2, 2)))[0]
    pts = rng.standard_normal((40, 5))
    a1 = arrangement_of([B, np.linalg.qr(rng.standard_normal((5, 2)))[0]])
    a2 = arrangement_of([B @ Q, a1.bases[1]])
    assert np.array_equal(classify(pts, a1), classify(pts, a2))


def test_classify_empty_arrangement():
    with pytest.raises(ValueError):
        classify(np.zeros((3, 2)), arrangement_of([]))


# ---------------------------------------------------------------------------
# error metrics

def test_subspace_error_identical_and_swapped():
    bases = random_bases(5, (2, 3), seed=17)
    arr = arrangement_of(bases)
    assert subspace_error(arr, arr) == 0.0
    assert subspace_error(arr, arrangement_of(bases[::-1])) == 0.0


def test_subspace_error_orthogonal_lines():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    err = subspace_error(arrangement_of([e1]), arrangement_of([e2]))
    assert err == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_subspace_error_count_mismatch():
    bases = random_bases(4, (1, 1), seed=18)
    with pytest.raises(ValueError):
        subspace_error(arrangement_of(bases), arrangement_of(bases[:1]))


def test_subspace_error_symmetric():
    a = arrangement_of(random_bases(5, (2, 2), seed=19))
    b = arrangement_of(random_bases(5, (2, 2), seed=20))
    assert subspace_error(a, b) == pytest.approx(subspace_error(b, a), rel=1e-12)


def test_misclassification_identical_and_flipped():
    labels = np.array([0, 1, 1, 0, 1])
    assert misclassification_error(labels, labels) == 0.0
    assert misclassification_error(labels, 1 - labels) == 0.0


def test_misclassification_independent_labels_near_half():
    rng = np.random.default_rng(21)
    a = rng.integers(0, 2, 10000)
    b = rng.integers(0, 2, 10000)
    assert misclassification_error(a, b) == pytest.approx(0.5, abs=0.02)


def test_misclassification_length_mismatch():
    with pytest.raises(ValueError):
        misclassification_error(np.zeros(3), np.zeros(4))


# ---------------------------------------------------------------------------
# structure of subspace-supported moments

def test_arrangement_moment_flattening_rank():
    rng = np.random.default_rng(22)
    bases = random_bases(6, (2, 2), seed=23)
    pts, _ = random_subspace_points(bases, 100, 0.0, rng)
    M4 = sample_moment(pts, 4)
    sv = np.linalg.svd(flatten_mat(M4), compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    assert rank <= math.comb(2 + 1, 2) * 2 == 6
