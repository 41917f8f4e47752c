import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regnmf.errors import ShapeError, UndefinedMetricError
from regnmf.nmf import FactorPair, NmfOptions, factorize
from regnmf.postprocess import canonicalize, frobenius_error, r_squared
from regnmf.weights import ScalarWeights, expand_scalar_weights, objective


def random_pair(rng, n=5, d=2, m=6):
    return FactorPair(rng.uniform(size=(n, d)), rng.uniform(size=(d, m)))


class TestCanonicalize:
    def test_permutation_only(self):
        f = FactorPair([[2.0, 0.0], [0.0, 4.0]], [[0.5, 0.5, 0.0], [0.25, 0.25, 0.5]])
        c = canonicalize(f)
        np.testing.assert_array_equal(c.factors.l, [[0, 2], [4, 0]])
        np.testing.assert_array_equal(c.factors.r, [[0.25, 0.25, 0.5], [0.5, 0.5, 0.0]])
        np.testing.assert_array_equal(c.order, [1, 0])
        np.testing.assert_array_equal(c.factors.product(), f.product())

    def test_rank_one(self, rng):
        c = canonicalize(random_pair(rng, d=1))
        assert abs(c.factors.r.sum() - 1) < 1e-12

    def test_random_product(self, rng):
        f = random_pair(rng)
        c = canonicalize(f)
        assert np.linalg.norm(c.factors.product() - f.product()) < 1e-12 * np.linalg.norm(f.product())

    def test_zero_rows_last(self):
        l = np.array([[5.0, 1.0, 2.0], [1.0, 1.0, 2.0]])
        r = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]])
        c = canonicalize(FactorPair(l, r))
        assert c.order[-1] == 0
        assert c.scale[-1] == 1.0
        np.testing.assert_array_equal(c.factors.r[-1], [0, 0])

    def test_ties_stable(self):
        l = np.ones((2, 3))
        r = np.eye(3)
        np.testing.assert_array_equal(canonicalize(FactorPair(l, r)).order, [0, 1, 2])

    def test_reconstruction_formula(self, rng):
        f = random_pair(rng, 4, 3, 5)
        c = canonicalize(f)
        np.testing.assert_allclose(c.factors.l, f.l[:, c.order] * c.scale, rtol=1e-15)
        np.testing.assert_allclose(c.factors.r, f.r[c.order] / c.scale[:, None], rtol=1e-15)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), d=st.integers(1, 4),
       m=st.integers(1, 6))
def test_canonical_invariants(seed, n, d, m):
    rng = np.random.default_rng(seed)
    f = FactorPair(rng.uniform(size=(n, d)) * (rng.uniform(size=(n, d)) > 0.2),
                   rng.uniform(size=(d, m)) * (rng.uniform(size=(d, m)) > 0.2))
    c = canonicalize(f)
    sums = c.factors.r.sum(axis=1)
    nz = sums > 0
    assert np.all(np.abs(sums[nz] - 1) < 1e-12)
    colsum = c.factors.l.sum(axis=0)[nz]
    assert np.all(np.diff(colsum) <= 0)
    prod = f.product()
    assert np.linalg.norm(c.factors.product() - prod) <= 1e-10 * (1 + np.linalg.norm(prod))
    again = canonicalize(c.factors)
    np.testing.assert_allclose(again.factors.l, c.factors.l, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(again.factors.r, c.factors.r, rtol=1e-12, atol=1e-15)


class TestRSquared:
    def test_exact(self, rng):
        f = random_pair(rng)
        assert r_squared(f.product(), f) == 1.0

    def test_baseline(self, rng):
        y = rng.uniform(size=(5, 4))
        means = y.mean(axis=0, keepdims=True)
        f = FactorPair(np.ones((5, 1)), means)
        assert abs(r_squared(y, f)) < 1e-14

    def test_hand_example(self):
        f = FactorPair([[1.0], [1.0]], [[0.5, 0.5]])
        assert r_squared([[1.0, 0.0], [0.0, 1.0]], f) == 0.0

    def test_negative_for_bad_fit(self):
        f = FactorPair([[1.0], [1.0]], [[0.0, 1.0]])
        assert r_squared([[1.0, 0.0], [0.0, 1.0]], f) < 0

    def test_identical_rows(self):
        with pytest.raises(UndefinedMetricError):
            r_squared([[1.0, 2.0], [1.0, 2.0]], FactorPair([[1.0], [1.0]], [[1.0, 2.0]]))

    def test_invariant_under_canonicalize(self, rng):
        y = rng.uniform(size=(5, 6))
        f = random_pair(rng)
        assert abs(r_squared(y, f) - r_squared(y, canonicalize(f).factors)) < 1e-12

    def test_unit_weights_match_unweighted(self, rng):
        y = rng.uniform(size=(5, 6))
        f = random_pair(rng)
        w = expand_scalar_weights(ScalarWeights(), 5, 6, 2)
        assert abs(r_squared(y, f, w) - r_squared(y, f)) < 1e-14

    def test_fit_quality(self, rng):
        f = random_pair(rng, 12, 2, 7)
        res = factorize(f.product(), NmfOptions(rank=2, max_iters=3000))
        assert r_squared(f.product(), res.factors) > 0.999


class TestFrobeniusError:
    def test_exact(self, rng):
        f = random_pair(rng)
        assert frobenius_error(f.product(), f) == 0.0

    def test_345(self):
        assert frobenius_error([[3.0, 4.0]], FactorPair([[0.0]], [[0.0, 0.0]])) == 5.0

    def test_matches_objective(self, rng):
        y = rng.uniform(size=(5, 6))
        f = random_pair(rng)
        obj = objective(y, f.l, f.r, None)
        assert abs(frobenius_error(y, f) - np.sqrt(2 * obj)) < 1e-10

    def test_shape(self, rng):
        with pytest.raises(ShapeError):
            frobenius_error(np.ones((3, 3)), random_pair(rng))
