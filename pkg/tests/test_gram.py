import numpy as np
import pytest

from cdfreg import measure as msr
from cdfreg.basis import BernoulliBasis, CustomBasis, PolynomialBasis
from cdfreg.gram import (GramState, accumulate, gram_matrix_of_context,
                         population_gram_mc, regularized_gram,
                         response_vector_of_sample, state_from_flat_dict,
                         state_to_flat_dict)

UNIT = msr.make_uniform_measure(0.0, 1.0, 64)


def test_bernoulli_gram_closed_form():
    b = BernoulliBasis(2)
    G = gram_matrix_of_context(b, [0.5, 0.75], UNIT)
    assert np.allclose(G, [[0.25, 0.125], [0.125, 0.0625]], atol=1e-14)


def test_constant_one_basis_gram():
    b = CustomBasis(1, lambda x, ts: np.ones((1, np.atleast_1d(ts).size)), 0.0, 1.0)
    G = gram_matrix_of_context(b, None, UNIT)
    assert G[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_polynomial_gram_quadrature():
    b = PolynomialBasis(1)
    G = gram_matrix_of_context(b, 1.0, UNIT)
    assert G[0, 0] == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_bernoulli_fast_path_matches_quadrature():
    rng = np.random.default_rng(0)
    b = BernoulliBasis(3)
    for _ in range(10):
        p = rng.random(3)
        fast = gram_matrix_of_context(b, p, UNIT)
        P = b.eval_nodes(p, UNIT.nodes)
        slow = (P * UNIT.weights) @ P.T
        assert np.max(np.abs(fast - slow)) < 1e-8


def test_response_vector_bernoulli():
    b = BernoulliBasis(2)
    assert np.allclose(response_vector_of_sample(b, [0.5, 0.25], 0.0, UNIT),
                       [0.5, 0.75])
    assert np.allclose(response_vector_of_sample(b, [0.5, 0.25], 1.0, UNIT),
                       [0.0, 0.0])


def test_response_vector_below_support():
    b = PolynomialBasis(2)
    full = (b.eval_nodes(1.0, UNIT.nodes) * UNIT.weights).sum(axis=1)
    got = response_vector_of_sample(b, 1.0, -5.0, UNIT)
    assert np.allclose(got, full, atol=1e-12)


def test_response_vector_rejects_nonfinite_y():
    b = BernoulliBasis(1)
    with pytest.raises(ValueError):
        response_vector_of_sample(b, [0.5], float("nan"), UNIT)


def test_accumulate_counts_and_linearity():
    b = BernoulliBasis(2)
    s = GramState(2, UNIT)
    s = accumulate(s, b, [0.5, 0.75], 0.0)
    assert s.n == 1
    s = accumulate(s, b, [0.5, 0.75], 0.0)
    q = np.array([0.5, 0.25])
    assert np.allclose(s.U, 2 * np.outer(q, q), atol=1e-12)


def test_accumulate_order_independence():
    b = BernoulliBasis(2)
    pairs = [([0.5, 0.75], 0.0), ([0.2, 0.9], 1.0)]
    s1 = GramState(2, UNIT)
    s2 = GramState(2, UNIT)
    for x, y in pairs:
        s1 = accumulate(s1, b, x, y)
    for x, y in reversed(pairs):
        s2 = accumulate(s2, b, x, y)
    assert np.allclose(s1.U, s2.U, atol=1e-12)
    assert np.allclose(s1.u, s2.u, atol=1e-12)


def test_accumulate_dimension_mismatch():
    with pytest.raises(ValueError):
        accumulate(GramState(3, UNIT), BernoulliBasis(2), [0.5, 0.5], 0.0)


def test_gram_invariants_random_sequences():
    rng = np.random.default_rng(3)
    b = BernoulliBasis(3)
    s = GramState(3, UNIT)
    prev_mu = 0.0
    for _ in range(20):
        s = accumulate(s, b, rng.random(3), float(rng.integers(0, 2)))
        assert np.max(np.abs(s.U - s.U.T)) < 1e-12
        mu = float(np.linalg.eigvalsh(s.U)[0])
        assert mu >= -1e-10
        assert mu >= prev_mu - 1e-12  # smallest eigenvalue nondecreasing in n
        prev_mu = mu
        assert np.trace(s.U) <= s.n * s.d + 1e-9
        assert np.all(s.u >= -1e-12) and np.all(s.u <= s.n + 1e-12)


def test_regularized_gram():
    s = GramState(3, UNIT)
    assert np.allclose(regularized_gram(s, 2.0), 2.0 * np.eye(3))
    s2 = accumulate(s, BernoulliBasis(3), [0.1, 0.2, 0.3], 0.0)
    assert np.allclose(regularized_gram(s2, 0.0), s2.U)
    with pytest.raises(ValueError):
        regularized_gram(s, -1.0)


def test_population_gram_degenerate_and_atoms():
    b = BernoulliBasis(2)
    x = np.array([0.5, 0.75])
    pg = population_gram_mc(b, ([x], [1.0]), UNIT, n=7)
    assert np.allclose(pg.Sigma, 7 * gram_matrix_of_context(b, x, UNIT), atol=1e-12)

    x2 = np.array([0.2, 0.9])
    pg2 = population_gram_mc(b, ([x, x2], [0.5, 0.5]), UNIT, n=4)
    expect = 2.0 * (gram_matrix_of_context(b, x, UNIT)
                    + gram_matrix_of_context(b, x2, UNIT))
    assert np.allclose(pg2.Sigma, expect, atol=1e-12)
    assert np.linalg.eigvalsh(pg2.Sigma)[0] >= -1e-10


def test_population_gram_mc_sampler():
    b = BernoulliBasis(2)
    pg = population_gram_mc(b, lambda rng: rng.random(2), UNIT, n=1,
                            mc_per_step=500, seed=9)
    assert pg.mc_samples == 500
    assert np.allclose(pg.Sigma, pg.Sigma.T)


def test_state_flat_round_trip():
    b = BernoulliBasis(2)
    s = accumulate(GramState(2, UNIT), b, [0.5, 0.75], 0.0)
    s2 = state_from_flat_dict(state_to_flat_dict(s))
    assert s2.n == s.n and np.allclose(s2.U, s.U) and np.allclose(s2.u, s.u)


def test_merge():
    b = BernoulliBasis(2)
    s1 = accumulate(GramState(2, UNIT), b, [0.5, 0.75], 0.0)
    s2 = accumulate(GramState(2, UNIT), b, [0.2, 0.9], 1.0)
    merged = s1.merge(s2)
    assert merged.n == 2
    assert np.allclose(merged.U, s1.U + s2.U)
