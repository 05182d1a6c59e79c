"""Interaction indices computed from a sparse Fourier spectrum.

Every index here is linear in the spectrum and has the form

    I(S) = sum_{R >= S} F(R) * w(|S|, |R|)

for a kernel ``w`` that depends only on the two cardinalities. Outputs are
emitted on the lattice of subsets of recovered supports; every other subset
has no contribution from the spectrum.

The ``brute_*`` functions take a dense game ``v`` of length ``2**n`` (index bit
``i`` = feature ``i`` present) and evaluate each index from its game-theoretic
definition. They exist to validate the conversions and are capped at small n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .decoder import RecoveredSpectrum
from .gf2 import BinaryVector
from .wht import BRUTE_FORCE_CAP

KINDS = ("mobius", "banzhaf-ii", "shapley-value", "shapley-ii", "faith-banzhaf", "faith-shap", "shapley-taylor")
ORDERED_KINDS = ("faith-banzhaf", "faith-shap", "shapley-taylor")
MAX_SUPPORT_DEGREE = 24


@dataclass
class IndexReport:
    kind: str
    n: int
    order: int | None = None
    attributions: dict[BinaryVector, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown index kind {self.kind!r}")

    def __getitem__(self, subset: BinaryVector) -> float:
        return self.attributions.get(subset, 0.0)

    def value(self, features) -> float:
        return self[BinaryVector.from_indices(self.n, features)]

    def items_sorted(self) -> list[tuple[BinaryVector, float]]:
        return sorted(self.attributions.items())

    def ranked(self, include_empty: bool = False) -> list[tuple[BinaryVector, float]]:
        """Entries by decreasing magnitude; ties broken by subset order."""
        rows = [(s, v) for s, v in self.items_sorted() if include_empty or s.weight > 0]
        return sorted(rows, key=lambda sv: -abs(sv[1]))

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.order is not None:
            out["order"] = self.order
        out["entries"] = [{"subset": str(s), "value": float(v)} for s, v in self.items_sorted()]
        return out

    @classmethod
    def from_json(cls, obj: dict, n: int | None = None) -> IndexReport:
        entries = obj.get("entries", [])
        if n is None:
            if not entries:
                raise ValueError("n is required for an empty report")
            n = len(entries[0]["subset"])
        attrs = {BinaryVector.from_string(e["subset"]): float(e["value"]) for e in entries}
        return cls(obj["kind"], n, obj.get("order"), attrs)


def _submasks(r: int):
    s = r
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & r


def _check_degree(spectrum: RecoveredSpectrum) -> None:
    for k in spectrum.entries:
        if k.weight > MAX_SUPPORT_DEGREE:
            raise ValueError(f"support of degree {k.weight} exceeds the lattice cap {MAX_SUPPORT_DEGREE}")


def _apply_kernel(spectrum: RecoveredSpectrum, kernel, max_order: int | None = None) -> dict[BinaryVector, float]:
    """``I(S) = sum_{R >= S} F(R) kernel(|S|, |R|)`` over subsets of recovered supports."""
    _check_degree(spectrum)
    acc: dict[int, float] = {}
    for k, v in spectrum.items_sorted():
        r = k.to_int()
        wr = k.weight
        for s in _submasks(r):
            ws = s.bit_count()
            if max_order is not None and ws > max_order:
                continue
            w = kernel(ws, wr)
            if w is None:
                continue
            acc[s] = acc.get(s, 0.0) + v * w
    n = spectrum.n
    return {BinaryVector.from_int(n, s): val for s, val in acc.items()}


@lru_cache(maxsize=None)
def _mobius_w(s: int, r: int) -> float:
    return float((-2) ** s)


@lru_cache(maxsize=None)
def _sii_w(s: int, r: int) -> float:
    if (r - s) % 2:
        return 0.0
    return float(Fraction((-2) ** s, r - s + 1))


@lru_cache(maxsize=None)
def _taylor_top_w(ell: int, r: int) -> float:
    # sum_{j=ell}^{r} (-2)^j C(r - ell, j - ell) / C(j, ell)
    total = sum(Fraction((-2) ** j * math.comb(r - ell, j - ell), math.comb(j, ell)) for j in range(ell, r + 1))
    return float(total)


@lru_cache(maxsize=None)
def _faith_shap_w(s: int, r: int, ell: int) -> float:
    base = Fraction((-2) ** s)
    if r <= ell or s == 0:
        return float(base)
    pre = Fraction((-1) ** (ell - s) * s * math.comb(ell, s), ell + s)
    inner = Fraction(0)
    # T with S < T <= R and |T| = j > ell; there are C(r - s, j - s) of them
    for j in range(ell + 1, r + 1):
        inner += Fraction(math.comb(r - s, j - s) * math.comb(j - 1, ell) * (-2) ** j,
                          math.comb(j + ell - 1, ell + s))
    return float(base + pre * inner)


def to_mobius(spectrum: RecoveredSpectrum) -> IndexReport:
    """Harsanyi dividends ``(-2)**|S| sum_{T >= S} F(T)``."""
    return IndexReport("mobius", spectrum.n, None, _apply_kernel(spectrum, _mobius_w))


def to_banzhaf_ii(spectrum: RecoveredSpectrum) -> IndexReport:
    """``(-2)**|S| F(S)``: one entry per recovered coefficient."""
    attrs = {k: float((-2) ** k.weight) * v for k, v in spectrum.items_sorted()}
    return IndexReport("banzhaf-ii", spectrum.n, None, attrs)


def to_shapley_ii(spectrum: RecoveredSpectrum) -> IndexReport:
    return IndexReport("shapley-ii", spectrum.n, None, _apply_kernel(spectrum, _sii_w))


def to_shapley_value(spectrum: RecoveredSpectrum) -> IndexReport:
    """``SV(i) = -2 sum_{R containing i, |R| odd} F(R) / |R|``."""
    attrs = _apply_kernel(spectrum, lambda s, r: _sii_w(s, r) if s == 1 else None, 1)
    return IndexReport("shapley-value", spectrum.n, 1, attrs)


def _check_order(order: int) -> None:
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")


def to_faith_banzhaf(spectrum: RecoveredSpectrum, order: int) -> IndexReport:
    """Moebius coefficients of the spectrum truncated to degree ``order``."""
    _check_order(order)
    attrs = _apply_kernel(spectrum, lambda s, r: _mobius_w(s, r) if r <= order else None, order)
    return IndexReport("faith-banzhaf", spectrum.n, order, attrs)


def to_faith_shap(spectrum: RecoveredSpectrum, order: int) -> IndexReport:
    _check_order(order)
    attrs = _apply_kernel(spectrum, lambda s, r: _faith_shap_w(s, r, order), order)
    return IndexReport("faith-shap", spectrum.n, order, attrs)


def to_shapley_taylor(spectrum: RecoveredSpectrum, order: int) -> IndexReport:
    """Moebius values below ``order``; the top order absorbs all higher terms."""
    _check_order(order)

    def kernel(s, r):
        return _mobius_w(s, r) if s < order else _taylor_top_w(order, r)

    return IndexReport("shapley-taylor", spectrum.n, order, _apply_kernel(spectrum, kernel, order))


def compute_index(spectrum: RecoveredSpectrum, kind: str, order: int | None = None) -> IndexReport:
    if kind not in KINDS:
        raise ValueError(f"unknown index kind {kind!r}; choose from {', '.join(KINDS)}")
    if kind in ORDERED_KINDS:
        if order is None:
            raise ValueError(f"{kind} needs an order")
        return {"faith-banzhaf": to_faith_banzhaf, "faith-shap": to_faith_shap,
                "shapley-taylor": to_shapley_taylor}[kind](spectrum, order)
    return {"mobius": to_mobius, "banzhaf-ii": to_banzhaf_ii, "shapley-value": to_shapley_value,
            "shapley-ii": to_shapley_ii}[kind](spectrum)


# --- brute-force oracles over dense games ---------------------------------

def _game_dim(v: np.ndarray) -> int:
    n = v.size.bit_length() - 1
    if (1 << n) != v.size:
        raise ValueError("game length must be a power of two")
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"brute-force oracles are capped at n <= {BRUTE_FORCE_CAP}")
    return n


def _cube(v) -> tuple[np.ndarray, int]:
    v = np.asarray(v, dtype=float)
    n = _game_dim(v)
    return v.reshape([2] * n) if n else v.reshape(()), n


def _axis(n: int, i: int) -> int:
    # C-order reshape puts bit 0 on the last axis
    return n - 1 - i


def _derivative(cube: np.ndarray, n: int, subset) -> np.ndarray:
    """Discrete derivative along ``subset``, as a cube over the remaining features."""
    out = cube
    for i in sorted(subset, reverse=True):
        out = np.diff(out, axis=_axis(n, i)).squeeze(axis=_axis(n, i))
        n -= 1
    return out


def _sizes(dims: int) -> np.ndarray:
    """Cardinality of every coalition in a cube with ``dims`` axes."""
    if dims == 0:
        return np.zeros(())
    return np.add.reduce(np.indices([2] * dims), axis=0)


def _all_subsets(n: int, max_order: int | None = None):
    top = n if max_order is None else min(n, max_order)
    for size in range(top + 1):
        yield from itertools.combinations(range(n), size)


def _report(kind: str, n: int, order, values: dict) -> IndexReport:
    return IndexReport(kind, n, order, {BinaryVector.from_indices(n, s): float(x) for s, x in values.items()})


def brute_mobius(v) -> IndexReport:
    """Inclusion-exclusion ``a(S) = sum_{T <= S} (-1)**|S - T| v(T)``."""
    cube, n = _cube(v)
    a = cube.copy()
    for ax in range(n):
        a = np.concatenate([a.take([0], axis=ax), np.diff(a, axis=ax)], axis=ax)
    flat = a.reshape(-1)
    return IndexReport("mobius", n, None,
                       {BinaryVector.from_int(n, i): float(flat[i]) for i in range(flat.size)})


def brute_banzhaf_ii(v) -> IndexReport:
    """Average of the discrete derivative over all contexts."""
    cube, n = _cube(v)
    return _report("banzhaf-ii", n, None, {S: _derivative(cube, n, S).mean() for S in _all_subsets(n)})


def _sii_weights(n: int, s: int) -> np.ndarray:
    sizes = _sizes(n - s)
    fact = math.factorial
    table = np.array([fact(n - t - s) * fact(t) / fact(n - s + 1) for t in range(n - s + 1)])
    return table[sizes.astype(int)]


def brute_shapley_ii(v) -> IndexReport:
    cube, n = _cube(v)
    vals = {S: float(np.sum(_sii_weights(n, len(S)) * _derivative(cube, n, S))) for S in _all_subsets(n)}
    return _report("shapley-ii", n, None, vals)


def brute_shapley_value(v) -> IndexReport:
    """Exact Shapley values by averaging marginal contributions over every ordering."""
    v = np.asarray(v, dtype=float)
    n = _game_dim(v)
    if n > 9:
        raise ValueError("the permutation oracle is limited to n <= 9")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    phi = np.zeros(n)
    coal = np.zeros(perms.shape[0], dtype=np.int64)
    for pos in range(n):
        feat = perms[:, pos]
        nxt = coal | (1 << feat)
        np.add.at(phi, feat, v[nxt] - v[coal])
        coal = nxt
    phi /= max(perms.shape[0], 1)
    return _report("shapley-value", n, 1, {(i,): phi[i] for i in range(n)})


def _and_design(n: int, order: int) -> tuple[np.ndarray, list[tuple]]:
    subsets = list(_all_subsets(n, order))
    idx = np.arange(1 << n)
    cols = [np.all([(idx >> i) & 1 for i in S], axis=0) if S else np.ones(1 << n, dtype=bool) for S in subsets]
    return np.stack(cols, axis=1).astype(float), subsets


def brute_faith_banzhaf(v, order: int) -> IndexReport:
    """Uniform least-squares fit in the AND basis up to degree ``order``."""
    v = np.asarray(v, dtype=float)
    n = _game_dim(v)
    X, subsets = _and_design(n, order)
    beta, *_ = np.linalg.lstsq(X, v, rcond=None)
    return _report("faith-banzhaf", n, order, dict(zip(subsets, beta)))


def brute_faith_shap(v, order: int) -> IndexReport:
    """Shapley-kernel weighted least squares with exact fits at the empty and full coalitions."""
    v = np.asarray(v, dtype=float)
    n = _game_dim(v)
    X, subsets = _and_design(n, order)
    size = np.array([i.bit_count() for i in range(1 << n)])
    inner = (size > 0) & (size < n)
    w = np.zeros(1 << n)
    w[inner] = (n - 1) / np.array([math.comb(n, s) * s * (n - s) for s in size[inner]])
    ends = [0, (1 << n) - 1]
    A = X[ends]
    Xw = X[inner] * w[inner, None]
    H = X[inner].T @ Xw
    g = Xw.T @ v[inner]
    m = len(subsets)
    kkt = np.block([[H, A.T], [A, np.zeros((2, 2))]])
    rhs = np.concatenate([g, v[ends]])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return _report("faith-shap", n, order, dict(zip(subsets, sol[:m])))


def brute_shapley_taylor(v, order: int) -> IndexReport:
    """Discrete derivatives at the empty set below ``order``; Shapley-weighted average at ``order``."""
    cube, n = _cube(v)
    vals = {}
    for S in _all_subsets(n, order):
        d = _derivative(cube, n, S)
        if len(S) < order:
            vals[S] = d.reshape(-1)[0]
        else:
            sizes = _sizes(n - len(S)).astype(int)
            w = np.array([1.0 / math.comb(n - 1, t) for t in range(n - len(S) + 1)])[sizes]
            vals[S] = order / n * float(np.sum(w * d))
    return _report("shapley-taylor", n, order, vals)


def dense_game(spectrum: RecoveredSpectrum) -> np.ndarray:
    """Values of the surrogate on all ``2**n`` coalitions."""
    from .wht import all_masks

    return spectrum(all_masks(spectrum.n))
