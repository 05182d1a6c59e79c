"""
Direct LASSO versus message passing
===================================

Enumerating every parity of degree <= d is fine for small n. The column count
grows like n^d though, and past a few hundred thousand columns the regression
baseline refuses and points at the decoder instead.
"""

import time

import numpy as np

from spex.baselines import ColumnCapError, RegressionProblem, column_count, lasso_fourier
from spex.decoder import message_passing
from spex.gf2 import unpack_bits
from spex.oracle import random_planted, synthetic_oracle
from spex.sampling import build_plan, collect, distinct_masks

for n in (16, 64, 256, 1024):
    print(f"n={n:5d}: degree-2 columns {column_count(n, 2):>8d}, degree-3 columns {column_count(n, 3):>12d}")

# same samples, two estimators
n = 24
planted = random_planted(n, 10, 2, seed=4, random_sign=True)
oracle = synthetic_oracle(planted)
plan = build_plan(n, 5, seed=4)
bank = collect(plan, oracle)

t0 = time.perf_counter()
decoded = message_passing(bank)
t_mp = time.perf_counter() - t0

unique, inverse = distinct_masks(plan)
masks = unpack_bits(unique, n)
t0 = time.perf_counter()
lasso = lasso_fourier(RegressionProblem(masks, oracle(masks), degree=2, seed=4))
t_lasso = time.perf_counter() - t0

truth = set(planted.coefficients)
print(f"message passing: {len(decoded)} terms, exact support {decoded.support() == truth}, {t_mp:.2f}s")
print(f"lasso (d=2):     {len(lasso)} terms, exact support {lasso.support() == truth}, {t_lasso:.2f}s")

# at n=256, degree 3 is out of reach for the dense design
wide = np.zeros((10, 256), dtype=np.uint8)
try:
    lasso_fourier(RegressionProblem(wide, np.arange(10.0), degree=3))
except ColumnCapError as exc:
    print("refused:", exc)
