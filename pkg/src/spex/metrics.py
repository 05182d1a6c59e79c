"""Faithfulness, top-r removal and interaction recovery metrics.

A surrogate is any callable mapping a ``(N, n)`` 0/1 mask array to ``N``
values; :class:`~spex.decoder.RecoveredSpectrum` qualifies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .gf2 import BinaryVector
from .rng import stream

EXHAUSTIVE_CAP = 100_000
DEFAULT_TEST_MASKS = 10_000


@dataclass
class MetricResult:
    name: str
    value: float
    config: dict = field(default_factory=dict)
    degenerate: bool = False

    def to_json(self) -> dict:
        value = None if not np.isfinite(self.value) else float(self.value)
        return {"name": self.name, "value": value, "degenerate": self.degenerate, "config": dict(self.config)}


def sample_test_masks(n: int, count: int, seed: int) -> np.ndarray:
    """Uniform random masks from the ``test-masks`` stream."""
    return stream(seed, "test-masks").integers(0, 2, size=(count, n), dtype=np.uint8)


def faithfulness_r2(surrogate, oracle, n: int, test_count: int = DEFAULT_TEST_MASKS, seed: int = 0) -> MetricResult:
    """``1 - |f_hat - f|^2 / |f - mean(f)|^2`` on fresh uniform masks."""
    if test_count < 2:
        raise ValueError("test_count must be >= 2")
    masks = sample_test_masks(n, test_count, seed)
    f = np.asarray(oracle(masks), dtype=float)
    fh = np.asarray(surrogate(masks), dtype=float)
    config = {"n": n, "test_masks": test_count, "seed": seed}
    denom = float(np.sum((f - f.mean()) ** 2))
    if denom == 0:
        return MetricResult("faithfulness_r2", float("nan"), config, degenerate=True)
    return MetricResult("faithfulness_r2", 1.0 - float(np.sum((fh - f) ** 2)) / denom, config)


def _removal_masks(n: int, removed: np.ndarray) -> np.ndarray:
    masks = np.ones((removed.shape[0], n), dtype=np.uint8)
    rows = np.repeat(np.arange(removed.shape[0]), removed.shape[1])
    masks[rows, removed.ravel()] = 0
    return masks


def _exhaustive_removal(surrogate, n: int, r: int, top: float, chunk: int = 8192) -> tuple[int, ...]:
    best, best_gap = (), -1.0
    combos = itertools.combinations(range(n), r)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64).reshape(-1, r)
        if block.shape[0] == 0:
            break
        gaps = np.abs(top - np.asarray(surrogate(_removal_masks(n, block)), dtype=float))
        i = int(np.argmax(gaps))
        if gaps[i] > best_gap:
            best, best_gap = tuple(int(x) for x in block[i]), float(gaps[i])
    return best


def _greedy_removal(surrogate, n: int, r: int, top: float) -> tuple[int, ...]:
    removed: list[int] = []
    for _ in range(r):
        cand = np.array([i for i in range(n) if i not in removed], dtype=np.int64)
        block = np.column_stack([np.tile(removed, (cand.size, 1)).astype(np.int64), cand])
        gaps = np.abs(top - np.asarray(surrogate(_removal_masks(n, block)), dtype=float))
        removed.append(int(cand[int(np.argmax(gaps))]))
    return tuple(sorted(removed))


def top_r_removal(surrogate, oracle, n: int, r: int, method: str = "auto",
                  exhaustive_cap: int = EXHAUSTIVE_CAP) -> MetricResult:
    """Remove the ``r`` features the surrogate deems most influential and
    report ``|f(1) - f(m*)| / |f(1)|`` on the true oracle."""
    if not 0 <= r < n:
        raise ValueError(f"need 0 <= r < n, got r={r}, n={n}")
    if method not in ("auto", "exhaustive", "greedy"):
        raise ValueError(f"unknown search method {method!r}")
    if method == "auto":
        method = "exhaustive" if math.comb(n, r) <= exhaustive_cap else "greedy"
    ones = np.ones((1, n), dtype=np.uint8)
    top = float(np.asarray(surrogate(ones), dtype=float)[0])
    if r == 0:
        removed = ()
    elif method == "exhaustive":
        removed = _exhaustive_removal(surrogate, n, r, top)
    else:
        removed = _greedy_removal(surrogate, n, r, top)
    m_star = _removal_masks(n, np.array([removed], dtype=np.int64).reshape(1, r))
    f1 = float(np.asarray(oracle(ones), dtype=float)[0])
    fm = float(np.asarray(oracle(m_star), dtype=float)[0])
    config = {"n": n, "r": r, "method": method, "removed": list(removed)}
    if f1 == 0:
        return MetricResult("top_r_removal", float("nan"), config, degenerate=True)
    return MetricResult("top_r_removal", abs(f1 - fm) / abs(f1), config)


def _as_set(s) -> frozenset[int]:
    if isinstance(s, BinaryVector):
        return frozenset(s.support())
    return frozenset(int(i) for i in s)


def recovery_at_r(interactions, ground_truth, r: int) -> MetricResult:
    """``(1/r) sum_i |S* & S_i| / |S_i|`` over the top ``r`` ranked subsets."""
    ranked = [_as_set(s) for s in interactions]
    if not 1 <= r <= len(ranked):
        raise ValueError(f"r={r} must be between 1 and the number of ranked interactions ({len(ranked)})")
    truth = _as_set(ground_truth)
    total = Fraction(0)
    for i, s in enumerate(ranked[:r]):
        if not s:
            raise ValueError(f"ranked interaction {i} is empty")
        total += Fraction(len(truth & s), len(s))
    return MetricResult("recovery_at_r", float(total / r), {"r": r})


def rank_interactions(spectrum) -> list[BinaryVector]:
    """Recovered supports by decreasing ``|F_hat(k)|``, excluding ``k = 0``."""
    rows = [(k, v) for k, v in spectrum.items_sorted() if k.weight > 0]
    return [k for k, _ in sorted(rows, key=lambda kv: -abs(kv[1]))]
