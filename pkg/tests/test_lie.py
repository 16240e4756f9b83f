import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ymflow.lie import (
    Ad,
    Ad_matrix,
    BranchError,
    NotSimpleError,
    casimir_centrality,
    casimir_lambda,
    exp_map,
    get_algebra,
    jacobi_residual,
    log_map,
    noise_rng,
    sample_white_noise,
)

seeds = st.integers(0, 2**31 - 1)


def vec(seed, dim, scale=1.0):
    return scale * np.random.default_rng(seed).standard_normal(dim)


def test_su2_casimir_is_minus_two(su2):
    lam, resid = casimir_lambda(su2)
    assert abs(lam + 2) <= 1e-12
    assert resid <= 1e-12
    assert casimir_centrality(su2) <= 1e-12


def test_su3_casimir_is_scalar(su3):
    lam, resid = casimir_lambda(su3)
    assert resid <= 1e-12
    assert lam < 0
    assert casimir_centrality(su3) <= 1e-12


def test_abelian_is_not_simple():
    with pytest.raises(NotSimpleError):
        casimir_lambda(get_algebra("abelian-test"))


def test_unknown_algebra():
    with pytest.raises(ValueError):
        get_algebra("so5")


def test_basis_is_orthonormal(su2, su3):
    for alg in (su2, su3):
        G = alg.from_matrix(alg.rep_matrices)
        assert np.allclose(G, np.eye(alg.dim), atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(["su2", "su3"]))
def test_bracket_antisymmetric_and_jacobi(seed, name):
    alg = get_algebra(name)
    x, y, z = (vec(seed + k, alg.dim) for k in range(3))
    assert np.allclose(alg.bracket(x, y), -alg.bracket(y, x), atol=1e-13)
    assert jacobi_residual(alg, x, y, z) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(["su2", "su3"]))
def test_bracket_matches_matrix_commutator(seed, name):
    alg = get_algebra(name)
    x, y = vec(seed, alg.dim), vec(seed + 1, alg.dim)
    X, Y = alg.to_matrix(x), alg.to_matrix(y)
    assert np.allclose(alg.from_matrix(X @ Y - Y @ X), alg.bracket(x, y), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(["su2", "su3"]))
def test_Ad_is_an_orthogonal_automorphism(seed, name):
    alg = get_algebra(name)
    g = exp_map(vec(seed, alg.dim), alg)
    x, y = vec(seed + 1, alg.dim), vec(seed + 2, alg.dim)
    M = Ad_matrix(g, alg)
    assert np.allclose(M.T @ M, np.eye(alg.dim), atol=1e-12)
    assert np.allclose(M @ x, Ad(g, x, alg), atol=1e-12)
    assert np.allclose(Ad(g, alg.bracket(x, y), alg), alg.bracket(Ad(g, x, alg), Ad(g, y, alg)), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(0.01, 1.0))
def test_log_inverts_exp_near_identity(seed, scale):
    alg = get_algebra("su2")
    x = vec(seed, 3)
    x = scale * x / max(np.linalg.norm(x), 1e-12)
    g = exp_map(x, alg)
    assert np.allclose(g @ np.conj(g.T), np.eye(2), atol=1e-13)
    assert np.allclose(log_map(g, alg), x, atol=1e-10)


def test_log_branch_error(su2):
    with pytest.raises(BranchError):
        log_map(-np.eye(2), su2)


def test_white_noise_deterministic_and_scaled():
    a = sample_white_noise(16, 1e-3, seed=3, stream=2)
    b = sample_white_noise(16, 1e-3, seed=3, stream=2)
    c = sample_white_noise(16, 1e-3, seed=3, stream=3)
    assert a.shape == (2, 16, 16, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    var = np.var(a) * (1 / 16) ** 2 * 1e-3
    assert abs(var - 1) < 0.1


def test_noise_rng_streams_independent():
    assert noise_rng(1, 0).random() != noise_rng(1, 1).random()


def test_white_noise_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_white_noise(16, 0.0, 1)
    with pytest.raises(ValueError):
        sample_white_noise(1, 1e-3, 1)
