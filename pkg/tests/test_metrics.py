import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spex.decoder import RecoveredSpectrum
from spex.gf2 import BinaryVector
from spex.metrics import (MetricResult, faithfulness_r2, rank_interactions, recovery_at_r, sample_test_masks,
                          top_r_removal)
from spex.oracle import random_planted, synthetic_oracle


def test_r2_examples():
    f = synthetic_oracle(random_planted(30, 10, 3, 0, random_sign=True))
    assert faithfulness_r2(f, f, 30, 2000).value == 1.0
    mean = f(sample_test_masks(30, 10_000, 0)).mean()
    flat = faithfulness_r2(lambda m: np.full(len(m), mean), f, 30, 10_000)
    assert abs(flat.value) < 0.02


def test_r2_of_full_spectrum_is_one():
    planted = random_planted(20, 15, 4, 3)
    spec = RecoveredSpectrum(20, dict(planted.coefficients))
    assert faithfulness_r2(spec, synthetic_oracle(planted), 20, 500, seed=9).value == pytest.approx(1.0, abs=1e-12)


def test_r2_degenerate_and_errors():
    const = lambda m: np.full(len(m), 2.0)
    res = faithfulness_r2(const, const, 10, 50)
    assert res.degenerate and np.isnan(res.value)
    assert json.loads(json.dumps(res.to_json()))["value"] is None
    with pytest.raises(ValueError):
        faithfulness_r2(const, const, 10, 1)


def test_test_masks_are_seeded():
    assert np.array_equal(sample_test_masks(12, 30, 5), sample_test_masks(12, 30, 5))
    assert not np.array_equal(sample_test_masks(12, 30, 5), sample_test_masks(12, 30, 6))


def test_removal_dictator_game():
    dictator = lambda m: m[:, 4].astype(float)
    res = top_r_removal(dictator, dictator, 9, 1)
    assert res.value == 1.0 and res.config["removed"] == [4]


@pytest.mark.parametrize("r", [0, 1, 3])
def test_removal_of_constant_game(r):
    const = lambda m: np.full(len(m), 1.5)
    assert top_r_removal(const, const, 8, r).value == 0.0


def test_removal_degenerate_and_errors():
    zero = lambda m: np.zeros(len(m))
    assert top_r_removal(zero, zero, 5, 1).degenerate
    with pytest.raises(ValueError):
        top_r_removal(zero, zero, 5, 5)
    with pytest.raises(ValueError):
        top_r_removal(zero, zero, 5, 1, method="anneal")


def test_removal_auto_switches_to_greedy():
    f = lambda m: m.sum(axis=1).astype(float)
    assert top_r_removal(f, f, 30, 2).config["method"] == "exhaustive"
    assert top_r_removal(f, f, 30, 2, exhaustive_cap=10).config["method"] == "greedy"


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.floats(0.01, 100), st.integers(1, 3))
def test_removal_invariant_to_positive_rescaling(seed, scale, r):
    f = synthetic_oracle(random_planted(10, 8, 3, seed % 1000, random_sign=True))
    a = top_r_removal(f, f, 10, r)
    b = top_r_removal(lambda m: scale * f(m), f, 10, r)
    assert a.config["removed"] == b.config["removed"]
    assert a.value == b.value


def test_recovery_examples():
    truth = {0, 1, 2}
    assert recovery_at_r([[0], [1, 2]], truth, 2).value == 1.0
    assert recovery_at_r([[4], [5, 6]], truth, 2).value == 0.0
    assert recovery_at_r([[0, 1], [2, 7]], truth, 2).value == 0.75
    bv = BinaryVector.from_indices(8, [1, 5])
    assert recovery_at_r([bv], BinaryVector.from_indices(8, [1]), 1).value == 0.5


def test_recovery_errors():
    with pytest.raises(ValueError):
        recovery_at_r([[]], {0}, 1)
    with pytest.raises(ValueError):
        recovery_at_r([[0]], {0}, 2)
    with pytest.raises(ValueError):
        recovery_at_r([[0]], {0}, 0)


@given(st.lists(st.sets(st.integers(0, 9), min_size=1), min_size=1, max_size=6), st.sets(st.integers(0, 9)),
       st.data())
def test_recovery_bounds_and_monotonicity(subsets, truth, data):
    r = data.draw(st.integers(1, len(subsets)))
    base = recovery_at_r(subsets, truth, r).value
    assert 0.0 <= base <= 1.0
    if truth:
        i = data.draw(st.integers(0, r - 1))
        swapped = list(subsets)
        swapped[i] = {min(truth)}
        assert recovery_at_r(swapped, truth, r).value >= base - 1e-15


def test_rank_interactions():
    n = 5
    spec = RecoveredSpectrum(n, {BinaryVector.zeros(n): 10.0, BinaryVector.from_indices(n, [1]): 0.5,
                                 BinaryVector.from_indices(n, [0, 2]): -2.0})
    assert [k.support() for k in rank_interactions(spec)] == [[0, 2], [1]]


def test_metric_result_json():
    res = MetricResult("x", 0.5, {"r": 1})
    assert res.to_json() == {"name": "x", "value": 0.5, "degenerate": False, "config": {"r": 1}}
