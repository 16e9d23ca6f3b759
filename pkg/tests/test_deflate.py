import math
import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from spm.deflate import (apply_reflections, deflate_btd, deflate_cp,
                         deflate_naive, householder_pivot_sequence,
                         solve_block_lambda, solve_lambda)
from spm.errors import DegenerateDeflationError, MembershipError
from spm.power import objective
from spm.spectral import extract_subspace
from spm.tensors import (flatten_mat, khatri_rao_power, kron_power,
                         star_power, symmetrize, tensor_power, tucker_apply)


def planted(L, n, R, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((L, R))
    A /= np.linalg.norm(A, axis=0)
    lam = rng.standard_normal(R)
    K = khatri_rao_power(A, n)
    T = ((K * lam) @ K.T).reshape((L,) * (2 * n))
    return T, A, lam


# ---------------------------------------------------------------------------
# weight solves

def test_solve_lambda_diagonal_case():
    C = np.diag(1.0 / np.array([2.0, -3.0, 5.0]))
    alpha = np.array([1.0, 0.0, 0.0])
    assert solve_lambda(C, alpha) == pytest.approx(2.0, abs=1e-14)


def test_solve_lambda_rank_drop_oracle():
    rng = np.random.default_rng(0)
    d = rng.standard_normal(6)
    d[np.abs(d) < 0.1] = 0.5
    alpha = rng.standard_normal(6)
    lam = solve_lambda(np.diag(1.0 / d), alpha)
    M = np.diag(d) - lam * np.outer(alpha, alpha)
    sv = np.linalg.svd(M, compute_uv=False)
    assert np.sum(sv > 1e-10 * sv[0]) == 5


def test_solve_lambda_scaling():
    rng = np.random.default_rng(1)
    d = 1.0 + np.abs(rng.standard_normal(4))
    alpha = rng.standard_normal(4)
    C = np.diag(1.0 / d)
    base = solve_lambda(C, alpha)
    assert solve_lambda(C, 3.0 * alpha) == pytest.approx(base / 9.0, rel=1e-12)


def test_solve_lambda_degenerate():
    C = np.diag([1.0, -1.0])
    alpha = np.array([1.0, 1.0])   # alpha^T C alpha = 0
    with pytest.raises(DegenerateDeflationError):
        solve_lambda(C, alpha)


def test_solve_block_lambda_reduces_to_scalar():
    rng = np.random.default_rng(2)
    d = 1.0 + np.abs(rng.standard_normal(5))
    alpha = rng.standard_normal(5)
    C = np.diag(1.0 / d)
    block = solve_block_lambda(C, alpha[:, None])
    assert block.shape == (1, 1)
    assert block[0, 0] == pytest.approx(solve_lambda(C, alpha), rel=1e-13)


def test_solve_block_lambda_orthonormal_identity():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
    assert np.allclose(solve_block_lambda(np.eye(6), Q), np.eye(3), atol=1e-12)


def test_solve_block_lambda_rank_drop_oracle():
    rng = np.random.default_rng(4)
    d = 1.0 + np.abs(rng.standard_normal(7))
    alpha = rng.standard_normal((7, 2))
    Lam = solve_block_lambda(np.diag(1.0 / d), alpha)
    assert np.allclose(Lam, Lam.T, atol=1e-10)
    M = np.diag(d) - alpha @ Lam @ alpha.T
    sv = np.linalg.svd(M, compute_uv=False)
    assert np.sum(sv > 1e-10 * sv[0]) == 5


# ---------------------------------------------------------------------------
# householder machinery

def test_reflection_sequence_eliminates_and_is_orthogonal():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((8, 3))
    vs = householder_pivot_sequence(M)
    W = apply_reflections(np.eye(8), vs)
    assert np.allclose(W.T @ W, np.eye(8), atol=1e-13)
    red = W.T @ M
    assert np.allclose(red[:5], 0.0, atol=1e-12)
    # trailing columns of W span colspan(M)
    Y = W[:, 5:]
    P = Y @ Y.T
    assert np.allclose(P @ M, M, atol=1e-12)


# ---------------------------------------------------------------------------
# CP deflation

def test_deflate_single_component_to_empty():
    rng = np.random.default_rng(6)
    a = rng.standard_normal(4)
    a /= np.linalg.norm(a)
    state = extract_subspace(2.5 * tensor_power(a, 4))
    new, lam = deflate_cp(state, a)
    assert new.r == 0
    assert lam == pytest.approx(2.5, rel=1e-10)


def test_deflate_keeps_survivors_on_objective_one():
    T, A, lam = planted(6, 2, 3, seed=7)
    state = extract_subspace(T)
    state, lam0 = deflate_cp(state, A[:, 0])
    assert lam0 == pytest.approx(lam[0], rel=1e-8)
    for i in (1, 2):
        assert objective(state, A[:, i]) >= 1 - 1e-9


def test_deflate_matches_exact_subtraction():
    T, A, lam = planted(5, 2, 4, seed=8)
    state = extract_subspace(T)
    a = A[:, 1]
    new, lam1 = deflate_cp(state, a)
    target = flatten_mat(T - lam1 * tensor_power(a, 4))
    rec = new.V @ np.linalg.inv(new.C) @ new.V.T
    assert np.linalg.norm(rec - target) <= 1e-8 * max(1.0, np.linalg.norm(target))


def test_deflate_membership_guard():
    T, A, _ = planted(5, 2, 2, seed=9)
    state = extract_subspace(T)
    rng = np.random.default_rng(10)
    x = rng.standard_normal(5)
    x /= np.linalg.norm(x)
    with pytest.raises(MembershipError):
        deflate_cp(state, x)


def test_deflate_state_invariants():
    T, A, _ = planted(6, 2, 5, seed=11)
    state = extract_subspace(T)
    for i in range(5):
        state, _ = deflate_cp(state, A[:, i])
        r = state.r
        assert np.allclose(state.V.T @ state.V, np.eye(r), atol=1e-10)
        assert np.allclose(state.C, state.C.T, atol=1e-12)
        for j in range(i + 1, 5):
            assert objective(state, A[:, j]) >= 1 - 1e-8


def test_full_deflation_conserves_tensor():
    T, A, lam = planted(6, 2, 5, seed=12)
    state = extract_subspace(T)
    recovered = np.zeros_like(T)
    for i in range(5):
        state, w = deflate_cp(state, A[:, i])
        recovered += w * tensor_power(A[:, i], 4)
    assert np.linalg.norm(recovered - T) <= 1e-8


def test_fast_vs_naive_deflation_subspaces():
    for seed in range(5):
        T, A, lam = planted(6, 2, 5, seed=100 + seed)
        state = extract_subspace(T)
        new, w = deflate_cp(state, A[:, 0])
        _, oracle = deflate_naive(T, a=A[:, 0], weight=w)
        assert oracle.r == 4
        assert subspace_angles(new.V, oracle.V).max() <= 1e-7


def test_rank_drops_by_one():
    T, A, _ = planted(5, 2, 3, seed=13)
    state = extract_subspace(T)
    new, _ = deflate_cp(state, A[:, 2])
    assert new.r == state.r - 1


# ---------------------------------------------------------------------------
# block deflation

def make_block_tensor(L, dims, seed, n=2):
    rng = np.random.default_rng(seed)
    blocks = []
    T = np.zeros((L,) * (2 * n))
    for ell in dims:
        Q, _ = np.linalg.qr(rng.standard_normal((L, ell)))
        core = symmetrize(rng.standard_normal((ell,) * (2 * n)))
        T += tucker_apply(Q, core)
        blocks.append((Q, core))
    return T, blocks


def test_block_deflation_single_column_equals_cp():
    T, A, lam = planted(5, 2, 3, seed=14)
    state = extract_subspace(T)
    a = A[:, 0]
    cp_state, lam_cp = deflate_cp(state, a)
    btd_state, core = deflate_btd(state, a[:, None])
    assert core.shape == (1, 1)
    assert core[0, 0] == pytest.approx(lam_cp, rel=1e-12)
    assert np.array_equal(cp_state.V, btd_state.V)
    assert np.array_equal(cp_state.C, btd_state.C)


def test_block_deflation_removes_block_rank():
    T, blocks = make_block_tensor(8, (2, 3), seed=15)
    state = extract_subspace(T)
    assert state.r == 3 + 6
    new, core_matrix = deflate_btd(state, blocks[0][0])
    assert new.r == 6
    assert np.allclose(core_matrix, core_matrix.T, atol=1e-10)


def test_block_deflation_matches_naive():
    T, blocks = make_block_tensor(7, (2, 2), seed=16)
    state = extract_subspace(T)
    Q, core = blocks[1]
    new, core_matrix = deflate_btd(state, Q)
    from spm.tensors import matrix_to_core
    removed = tucker_apply(Q, matrix_to_core(core_matrix, 2, 2))
    target = flatten_mat(T - removed)
    rec = new.V @ np.linalg.inv(new.C) @ new.V.T
    assert np.linalg.norm(rec - target) <= 1e-8 * max(1.0, np.linalg.norm(target))
    _, oracle = deflate_naive(T, factor=Q, core=matrix_to_core(core_matrix, 2, 2))
    assert subspace_angles(new.V, oracle.V).max() <= 1e-7


def test_block_deflation_rank_guard():
    T, blocks = make_block_tensor(6, (2,), seed=17)
    state = extract_subspace(T)     # r = 3
    rng = np.random.default_rng(18)
    big = np.linalg.qr(rng.standard_normal((6, 3)))[0]   # needs rank 6 > 3
    with pytest.raises(DegenerateDeflationError):
        deflate_btd(state, big)


# ---------------------------------------------------------------------------
# cost sanity: one reflection against a fresh eigendecomposition

def test_fast_deflation_beats_naive_at_scale():
    T, A, _ = planted(10, 2, 40, seed=19)
    state = extract_subspace(T)

    def fast():
        t0 = time.perf_counter()
        deflate_cp(state, A[:, 0])
        return time.perf_counter() - t0

    def naive():
        t0 = time.perf_counter()
        lam = solve_lambda(state.C, state.V.T @ kron_power(A[:, 0], 2))
        deflate_naive(T, a=A[:, 0], weight=lam)
        return time.perf_counter() - t0

    fast_t = min(fast() for _ in range(5))
    naive_t = min(naive() for _ in range(5))
    assert naive_t > fast_t
