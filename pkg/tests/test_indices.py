import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import random_spectrum, report_gap
from spex.decoder import RecoveredSpectrum, surrogate_eval
from spex.gf2 import BinaryVector
from spex.indices import (KINDS, MAX_SUPPORT_DEGREE, IndexReport, brute_banzhaf_ii, brute_faith_banzhaf,
                          brute_faith_shap, brute_mobius, brute_shapley_ii, brute_shapley_taylor,
                          brute_shapley_value, compute_index, dense_game, to_banzhaf_ii, to_faith_banzhaf,
                          to_faith_shap, to_mobius, to_shapley_ii, to_shapley_taylor, to_shapley_value)


def _one(n, idx, v):
    return RecoveredSpectrum(n, {BinaryVector.from_indices(n, idx): v})


def _all(spec, kind, order=None):
    return compute_index(spec, kind, order)


def test_mobius_examples():
    assert to_mobius(_one(5, [], 1.5)).attributions == {BinaryVector.zeros(5): 1.5}
    rep = to_mobius(_one(5, [1, 3], 0.25))
    assert rep.value([1, 3]) == pytest.approx(1.0)
    assert len(rep.attributions) == 4  # the lattice below {1, 3}


def test_banzhaf_examples():
    assert to_banzhaf_ii(_one(4, [2], 0.5)).value([2]) == -1.0
    assert to_banzhaf_ii(_one(4, [0, 1, 2], 0.5)).value([0, 1, 2]) == -4.0


def test_shapley_value_examples():
    rep = to_shapley_value(_one(4, [], 3.0))
    assert all(v == 0 for v in rep.attributions.values())
    assert to_shapley_value(_one(4, [1], 0.75)).value([1]) == -1.5
    assert all(k.weight == 1 for k in to_shapley_value(_one(6, [0, 2, 4], 1.0)).attributions)


def test_shapley_ii_examples():
    assert to_shapley_ii(RecoveredSpectrum(4)).attributions == {}
    assert to_shapley_ii(_one(4, [0, 3], 0.5)).value([0, 3]) == pytest.approx(2.0)


def test_faith_banzhaf_examples():
    spec = random_spectrum(8, 6, 3, np.random.default_rng(0))
    assert report_gap(to_faith_banzhaf(spec, 3), to_mobius(spec)) < 1e-12
    zero = to_faith_banzhaf(spec, 0)
    assert set(zero.attributions) == {BinaryVector.zeros(8)}
    assert zero.value([]) == pytest.approx(spec.entries.get(BinaryVector.zeros(8), 0.0))


def test_faith_shap_on_low_degree_is_mobius():
    spec = random_spectrum(8, 6, 2, np.random.default_rng(1))
    assert report_gap(to_faith_shap(spec, 2), to_mobius(spec)) < 1e-12
    assert to_faith_shap(RecoveredSpectrum(5), 2).attributions == {}


def test_shapley_taylor_lower_orders_are_mobius():
    spec = random_spectrum(8, 6, 4, np.random.default_rng(2))
    st_rep, mob = to_shapley_taylor(spec, 2), to_mobius(spec)
    for s, v in st_rep.attributions.items():
        if s.weight < 2:
            assert v == pytest.approx(mob[s], abs=1e-12)
    low = random_spectrum(8, 6, 1, np.random.default_rng(3))
    assert all(abs(v) < 1e-12 for s, v in to_shapley_taylor(low, 2).attributions.items() if s.weight == 2)


@pytest.mark.parametrize("seed", range(3))
def test_against_brute_force_oracles(seed):
    n = 6
    spec = random_spectrum(n, 8, 4, np.random.default_rng(seed))
    game = dense_game(spec)
    pairs = [(to_mobius(spec), brute_mobius(game)),
             (to_banzhaf_ii(spec), brute_banzhaf_ii(game)),
             (to_shapley_ii(spec), brute_shapley_ii(game)),
             (to_shapley_value(spec), brute_shapley_value(game)),
             (to_faith_banzhaf(spec, 2), brute_faith_banzhaf(game, 2)),
             (to_faith_shap(spec, 2), brute_faith_shap(game, 2)),
             (to_shapley_taylor(spec, 2), brute_shapley_taylor(game, 2))]
    for fast, slow in pairs:
        assert report_gap(fast, slow) < 1e-8, fast.kind


@settings(max_examples=25)
@given(st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3), st.sampled_from(KINDS))
def test_conversions_are_linear(seed, a, b, kind):
    rng = np.random.default_rng(seed)
    A, B = random_spectrum(7, 5, 3, rng), random_spectrum(7, 5, 3, rng)
    combo = RecoveredSpectrum(7, {k: a * A.entries.get(k, 0.0) + b * B.entries.get(k, 0.0)
                                  for k in set(A.entries) | set(B.entries)})
    order = 2 if kind in ("faith-banzhaf", "faith-shap", "shapley-taylor") else None
    ia, ib, ic = (_all(s, kind, order) for s in (A, B, combo))
    keys = set(ia.attributions) | set(ib.attributions) | set(ic.attributions)
    for s in keys:
        assert ic[s] == pytest.approx(a * ia[s] + b * ib[s], abs=1e-9)


@settings(max_examples=25)
@given(st.integers(0, 2**31))
def test_shapley_efficiency(seed):
    n = 9
    spec = random_spectrum(n, 10, 5, np.random.default_rng(seed))
    total = sum(to_shapley_value(spec).attributions.values())
    gap = surrogate_eval(spec, BinaryVector.from_indices(n, range(n))) - surrogate_eval(spec, BinaryVector.zeros(n))
    assert total == pytest.approx(gap, abs=1e-8)


@given(st.integers(0, 2**31))
def test_banzhaf_singleton_identity(seed):
    spec = random_spectrum(10, 8, 3, np.random.default_rng(seed))
    rep = to_banzhaf_ii(spec)
    for i in range(10):
        assert rep.value([i]) == -2 * spec.entries.get(BinaryVector.from_indices(10, [i]), 0.0)


def test_single_support_lattice_agrees():
    spec = _one(6, [0, 2, 5], 0.3)
    k = BinaryVector.from_indices(6, [0, 2, 5])
    expected = -8 * 0.3
    assert to_mobius(spec)[k] == pytest.approx(expected)
    assert to_faith_banzhaf(spec, 3)[k] == pytest.approx(expected)
    assert to_banzhaf_ii(spec)[k] == pytest.approx(expected)


def test_report_json_round_trip():
    spec = random_spectrum(7, 5, 3, np.random.default_rng(4))
    rep = to_faith_shap(spec, 2)
    obj = json.loads(json.dumps(rep.to_json()))
    assert obj["kind"] == "faith-shap" and obj["order"] == 2
    back = IndexReport.from_json(obj)
    assert back.attributions == rep.attributions and back.order == 2
    assert "order" not in to_mobius(spec).to_json()
    assert IndexReport.from_json({"kind": "mobius", "entries": []}, n=3).attributions == {}
    with pytest.raises(ValueError):
        IndexReport.from_json({"kind": "mobius", "entries": []})


def test_ranked_orders_by_magnitude():
    rep = IndexReport("mobius", 3, None, {BinaryVector.zeros(3): 9.0, BinaryVector.from_indices(3, [0]): -2.0,
                                          BinaryVector.from_indices(3, [1]): 1.0})
    assert [s.support() for s, _ in rep.ranked()] == [[0], [1]]
    assert rep.ranked(include_empty=True)[0][1] == 9.0


def test_compute_index_errors():
    spec = _one(4, [0], 1.0)
    with pytest.raises(ValueError):
        compute_index(spec, "lime")
    with pytest.raises(ValueError):
        compute_index(spec, "faith-shap")
    with pytest.raises(ValueError):
        compute_index(spec, "faith-shap", -1)
    with pytest.raises(ValueError):
        IndexReport("lime", 4)
    wide = _one(MAX_SUPPORT_DEGREE + 2, range(MAX_SUPPORT_DEGREE + 1), 1.0)
    with pytest.raises(ValueError):
        to_mobius(wide)
