import numpy as np
import pytest

from spex.baselines import (ColumnCapError, RegressionProblem, column_count, default_lambda_grid, fourier_columns,
                            fourier_design, lasso_fourier, ridge_first_order)
from spex.gf2 import BinaryVector
from spex.oracle import random_planted, synthetic_oracle
from spex.wht import all_masks, brute_force_spectrum


def _uniform(n, count, seed):
    return np.random.default_rng(seed).integers(0, 2, size=(count, n), dtype=np.uint8)


def test_column_bookkeeping():
    assert column_count(12, 2) == 1 + 12 + 66
    assert fourier_columns(4, 2)[:5] == [(0,), (1,), (2,), (3,), (0, 1)]
    X = fourier_design(np.array([[1, 0, 1], [0, 0, 0]], dtype=np.uint8), [(0,), (0, 2)])
    assert X.tolist() == [[-1.0, 1.0], [1.0, 1.0]]


def test_lambda_grid_spans_four_decades():
    X = fourier_design(_uniform(6, 50, 0), fourier_columns(6, 2))
    y = np.random.default_rng(1).normal(size=50)
    grid = default_lambda_grid(X, y)
    assert grid.size == 16
    assert grid.max() / grid.min() == pytest.approx(1e4)


def test_lasso_recovers_planted_low_degree():
    planted = random_planted(12, 10, 2, 3, random_sign=True)
    masks = _uniform(12, 2000, 0)
    spec = lasso_fourier(RegressionProblem(masks, synthetic_oracle(planted)(masks), degree=2))
    assert spec.support() == set(planted.coefficients)
    assert max(abs(spec.entries[k] - v) for k, v in planted.coefficients.items()) < 1e-3


def test_lasso_trivial_inputs():
    masks = _uniform(8, 200, 2)
    assert lasso_fourier(RegressionProblem(masks, np.zeros(200))).entries == {}
    y = np.random.default_rng(0).normal(size=200)
    spec = lasso_fourier(RegressionProblem(masks, y, degree=0))
    assert spec.entries == pytest.approx({BinaryVector.zeros(8): y.mean()})


def test_unpenalized_complete_design_is_exact():
    n = 6
    f = synthetic_oracle(random_planted(n, 12, n, 5, random_sign=True))
    masks = all_masks(n)
    spec = lasso_fourier(RegressionProblem(masks, f(masks), degree=n, lambda_grid=[0.0]))
    assert np.allclose(spec.to_dense(), brute_force_spectrum(f, n), atol=1e-8)


def test_column_cap():
    masks = _uniform(64, 10, 0)
    with pytest.raises(ColumnCapError, match="message-passing"):
        lasso_fourier(RegressionProblem(masks, np.ones(10), degree=3, column_cap=1000))


def test_cv_is_deterministic():
    planted = random_planted(10, 6, 2, 1, noise_sigma=0.2)
    masks = _uniform(10, 400, 3)
    y = synthetic_oracle(planted)(masks)
    a = lasso_fourier(RegressionProblem(masks, y, seed=4))
    b = lasso_fourier(RegressionProblem(masks, y, seed=4))
    assert a.entries == b.entries


def test_problem_validation():
    with pytest.raises(ValueError):
        RegressionProblem(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        RegressionProblem(np.zeros((3, 2)), np.zeros(3), degree=-1)
    with pytest.raises(ValueError):
        RegressionProblem(np.zeros((3, 2)), np.zeros(3), lambda_grid=[-1.0])


def test_ridge_examples():
    masks = _uniform(6, 500, 0)
    zero = ridge_first_order(RegressionProblem(masks, np.zeros(500)))
    assert all(abs(v) < 1e-12 for v in zero.attributions.values())
    rep = ridge_first_order(RegressionProblem(masks, 2.0 * masks[:, 3] - 1.0))
    assert rep.value([3]) == pytest.approx(2.0, abs=1e-3)
    assert max(abs(rep.value([i])) for i in range(6) if i != 3) < 1e-3


def test_ridge_tracks_banzhaf_values():
    n = 8
    f = synthetic_oracle(random_planted(n, 10, 3, 2, random_sign=True))
    masks = _uniform(n, 4096, 1)
    rep = ridge_first_order(RegressionProblem(masks, f(masks)))
    F = brute_force_spectrum(f, n)
    bv = np.array([-2 * F[1 << i] for i in range(n)])
    got = np.array([rep.value([i]) for i in range(n)])
    assert np.max(np.abs(got - bv)) <= 0.05 * np.max(np.abs(bv))
