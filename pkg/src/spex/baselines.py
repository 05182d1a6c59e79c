"""Regression baselines over uniformly sampled masks.

``lasso_fourier`` enumerates every parity column of degree at most ``d`` and
fits an l1-penalized regression; it is exact but its width is
``sum_{j<=d} C(n, j)``, so it refuses problems past a column cap.
``ridge_first_order`` fits a linear model on the raw mask bits; under uniform
sampling its weights estimate Banzhaf values.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LassoCV, RidgeCV
from sklearn.model_selection import KFold

from .decoder import RecoveredSpectrum
from .gf2 import BinaryVector
from .indices import IndexReport
from .rng import stream

log = logging.getLogger(__name__)

DEFAULT_COLUMN_CAP = 200_000
GRID_SIZE = 16
LASSO_TOL = 1e-7
LASSO_MAX_ITER = 10_000
RIDGE_ALPHAS = np.logspace(-4, 4, 17)
ZERO_TOL = 1e-10  # refit coefficients below this fraction of max|y| are numerical zeros


class ColumnCapError(ValueError):
    """The low-degree design is too wide to enumerate."""


@dataclass
class RegressionProblem:
    masks: np.ndarray  # (N, n) 0/1
    values: np.ndarray
    degree: int = 2
    lambda_grid: np.ndarray | None = None
    folds: int = 5
    seed: int = 0
    column_cap: int = DEFAULT_COLUMN_CAP
    parallelism: int = 1

    def __post_init__(self):
        self.masks = np.atleast_2d(np.asarray(self.masks, dtype=np.uint8))
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.masks.shape[0] != self.values.size:
            raise ValueError(f"{self.masks.shape[0]} masks but {self.values.size} values")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.folds < 2:
            raise ValueError("at least two folds are needed for cross-validation")
        if self.lambda_grid is not None:
            self.lambda_grid = np.asarray(self.lambda_grid, dtype=float).ravel()
            if self.lambda_grid.size == 0 or np.any(self.lambda_grid < 0):
                raise ValueError("lambda grid must be non-empty and non-negative")

    @property
    def n(self) -> int:
        return self.masks.shape[1]


def column_count(n: int, degree: int) -> int:
    return sum(math.comb(n, j) for j in range(min(degree, n) + 1))


def fourier_columns(n: int, degree: int) -> list[tuple[int, ...]]:
    """Supports of every parity of degree ``1..degree``, in degree then lexicographic order."""
    return [c for j in range(1, min(degree, n) + 1) for c in itertools.combinations(range(n), j)]


def fourier_design(masks: np.ndarray, columns: list[tuple[int, ...]]) -> np.ndarray:
    """``X[r, c] = (-1)**<m_r, k_c>`` for the non-constant columns."""
    signs = 1.0 - 2.0 * np.asarray(masks, dtype=float)
    X = np.empty((signs.shape[0], len(columns)))
    for c, k in enumerate(columns):
        X[:, c] = np.prod(signs[:, list(k)], axis=1)
    return X


def default_lambda_grid(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """16 log-spaced values over ``[1e-4, 1] * max|X^T y| / rows`` (centered)."""
    yc = y - y.mean()
    Xc = X - X.mean(axis=0)
    top = float(np.max(np.abs(Xc.T @ yc))) / X.shape[0] if X.size else 0.0
    return top * np.logspace(0, -4, GRID_SIZE)


def _spectrum(n: int, intercept: float, columns, coefs, tol: float = 0.0) -> RecoveredSpectrum:
    out = RecoveredSpectrum(n)
    if abs(intercept) > tol:
        out.entries[BinaryVector.zeros(n)] = float(intercept)
    for k, v in zip(columns, coefs):
        if abs(v) > tol:
            out.entries[BinaryVector.from_indices(n, k)] = float(v)
    return out


def _ols(X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    A = np.hstack([np.ones((X.shape[0], 1)), X])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(beta[0]), beta[1:]


def lasso_fourier(problem: RegressionProblem) -> RecoveredSpectrum:
    """Cross-validated LASSO over parities of degree ``<= problem.degree``,
    followed by an ordinary least-squares refit on the selected support."""
    n, y = problem.n, problem.values
    width = column_count(n, problem.degree)
    if width > problem.column_cap:
        raise ColumnCapError(
            f"degree-{problem.degree} design at n={n} has {width} columns (cap {problem.column_cap}); "
            "use the message-passing decoder for problems of this size")
    if problem.degree == 0 or np.all(y == y[0]):
        return _spectrum(n, float(y.mean()), [], [])
    columns = fourier_columns(n, problem.degree)
    X = fourier_design(problem.masks, columns)

    grid = problem.lambda_grid if problem.lambda_grid is not None else default_lambda_grid(X, y)
    if np.all(grid == 0):
        intercept, coefs = _ols(X, y)
        return _spectrum(n, intercept, columns, coefs, ZERO_TOL * float(np.max(np.abs(y))))
    grid = np.unique(grid[grid > 0])[::-1]
    folds = KFold(problem.folds, shuffle=True,
                  random_state=int(stream(problem.seed, "cv-folds").integers(2**31 - 1)))
    model = LassoCV(alphas=grid, cv=folds, tol=LASSO_TOL, max_iter=LASSO_MAX_ITER, n_jobs=problem.parallelism)
    model.fit(X, y)
    keep = np.flatnonzero(model.coef_ != 0)
    log.info("lasso selected lambda=%.3g with %d of %d columns", model.alpha_, keep.size, len(columns))
    intercept, coefs = _ols(X[:, keep], y)
    return _spectrum(n, intercept, [columns[i] for i in keep], coefs, ZERO_TOL * float(np.max(np.abs(y))))


def ridge_first_order(problem: RegressionProblem) -> IndexReport:
    """Per-feature weights of a cross-validated ridge fit on the 0/1 mask bits."""
    n, y = problem.n, problem.values
    X = problem.masks.astype(float)
    folds = KFold(problem.folds, shuffle=True,
                  random_state=int(stream(problem.seed, "cv-folds").integers(2**31 - 1)))
    model = RidgeCV(alphas=RIDGE_ALPHAS, cv=folds).fit(X, y)
    attrs = {BinaryVector.from_indices(n, [i]): float(w) for i, w in enumerate(model.coef_)}
    return IndexReport("banzhaf-ii", n, 1, attrs)
