"""Peeling message-passing recovery of a sparse Fourier spectrum.

Factor nodes are the bins ``U_c(j)`` (vectors of length ``p + 1``, entry 0 is
the unshifted value). A bin whose residual is dominated by one coefficient is
a singleton; its BCH signature identifies ``k``. Recovered coefficients are
subtracted from every bin they alias into, which can expose new singletons.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bch import BchCode, decode_parity, signature, soft_decode_chase
from .gf2 import BinaryMatrix, BinaryVector, dot_parity, gf2_matvec_int
from .sampling import SampleBank

log = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.9
DEFAULT_CHASE_DEPTH = 6
DEFAULT_MAX_ROUNDS = 16


@dataclass
class FactorState:
    c: int
    j: int
    observation: np.ndarray  # length p + 1


@dataclass
class EntryInfo:
    round: int
    corr: float
    hits: int = 1


@dataclass
class RecoveredSpectrum:
    """Sparse map ``k -> F_hat(k)``; also the surrogate ``f_hat``."""

    n: int
    entries: dict[BinaryVector, float] = field(default_factory=dict)
    diagnostics: dict[BinaryVector, EntryInfo] = field(default_factory=dict)
    converged: bool = True
    rounds: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def support(self) -> set[BinaryVector]:
        return set(self.entries)

    def items_sorted(self) -> list[tuple[BinaryVector, float]]:
        return sorted(self.entries.items())

    def __call__(self, masks) -> np.ndarray:
        """Evaluate the surrogate on a ``(N, n)`` 0/1 mask array."""
        masks = np.atleast_2d(np.asarray(masks, dtype=np.uint8))
        if masks.shape[1] != self.n:
            raise ValueError(f"masks have {masks.shape[1]} features, spectrum has {self.n}")
        if not self.entries:
            return np.zeros(masks.shape[0])
        keys, vals = zip(*self.entries.items())
        K = np.array([k.to_bits() for k in keys], dtype=np.float32).T
        par = np.rint(masks.astype(np.float32) @ K).astype(np.int64) & 1
        return (1.0 - 2.0 * par) @ np.array(vals)

    def to_dense(self) -> np.ndarray:
        if self.n > 20:
            raise ValueError("dense spectra are limited to n <= 20")
        out = np.zeros(1 << self.n)
        for k, v in self.entries.items():
            out[k.to_int()] += v
        return out

    @classmethod
    def from_dense(cls, F, n: int, tol: float = 0.0) -> RecoveredSpectrum:
        F = np.asarray(F, dtype=float)
        return cls(n, {BinaryVector.from_int(n, int(i)): float(F[i]) for i in np.flatnonzero(np.abs(F) > tol)})

    def to_json(self) -> list[dict]:
        out = []
        for k, v in self.items_sorted():
            info = self.diagnostics.get(k)
            out.append({"k": str(k), "value": float(v),
                        "round": info.round if info else 0,
                        "corr": float(info.corr) if info else 1.0})
        return out

    @classmethod
    def from_json(cls, rows: list[dict], n: int | None = None) -> RecoveredSpectrum:
        entries, diag = {}, {}
        for r in rows:
            k = BinaryVector.from_string(r["k"])
            entries[k] = float(r["value"])
            diag[k] = EntryInfo(int(r.get("round", 0)), float(r.get("corr", 1.0)))
        if n is None:
            if not rows:
                raise ValueError("n is required for an empty spectrum")
            n = len(rows[0]["k"])
        return cls(n, entries, diag)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def surrogate_eval(spectrum: RecoveredSpectrum, m: BinaryVector) -> float:
    if m.length != spectrum.n:
        raise ValueError(f"mask length {m.length} != n = {spectrum.n}")
    return float(sum(v * (1 - 2 * dot_parity(m, k)) for k, v in spectrum.entries.items()))


def correlation(sig: np.ndarray, obs: np.ndarray) -> float:
    """Fraction of the bin's energy explained by one signature, in [0, 1]."""
    energy = float(obs @ obs)
    if energy == 0:
        return 0.0
    return float((sig @ obs) ** 2 / (sig.size * energy))


def correlation_bound(obs: np.ndarray) -> float:
    """Upper bound on :func:`correlation` over all +-1 signatures.

    ``|<sig, obs>| <= sum |obs_i|``, so a bin whose bound is below the gate
    cannot hold a verifiable singleton and decoding it is wasted work.
    """
    energy = float(obs @ obs)
    if energy == 0:
        return 0.0
    return float(np.abs(obs).sum() ** 2 / (obs.size * energy))


def estimate_coefficient(factor: FactorState, k: BinaryVector, code: BchCode) -> float:
    """``<signature(k), U_c(j)> / (p + 1)``."""
    sig = signature(code, k)
    return float(sig @ factor.observation) / sig.size


def _try_decode(obs: np.ndarray, code: BchCode, chase_depth: int) -> BinaryVector | None:
    if obs[0] != 0:
        ratios = obs[1:] / obs[0]
        out = decode_parity(code, ratios < 0)
        if out is not None:
            return BinaryVector.from_bits(out)
        if chase_depth < 1:
            return None
        return soft_decode_chase(code, ratios, chase_depth, skip_first=True)
    if chase_depth < 1:
        return None
    return soft_decode_chase(code, obs[1:], chase_depth)


def detect_singleton(factor: FactorState, code: BchCode, subsampler: BinaryMatrix,
                     gamma: float = DEFAULT_GAMMA, chase_depth: int = DEFAULT_CHASE_DEPTH):
    """Return ``(k, corr)`` when the bin holds a verifiable singleton, else ``None``.

    Hard decoding is tried first, then Chase soft decoding. A decoded ``k``
    must hash to this bin (``M_c k == j``) and its signature must explain more
    than ``gamma`` of the bin energy.
    """
    obs = np.asarray(factor.observation, dtype=float)
    if correlation_bound(obs) <= gamma:
        return None
    k = _try_decode(obs, code, chase_depth)
    if k is None:
        return None
    if gf2_matvec_int(subsampler, k) != factor.j:
        return None
    corr = correlation(signature(code, k), obs)
    if corr <= gamma:
        return None
    return k, corr


def message_passing(bank: SampleBank, gamma: float = DEFAULT_GAMMA, chase_depth: int = DEFAULT_CHASE_DEPTH,
                    max_rounds: int = DEFAULT_MAX_ROUNDS, rel_tol: float = 1e-10) -> RecoveredSpectrum:
    """Peel singletons until no bin decodes or ``max_rounds`` is reached.

    Each round decodes every active bin, averages the estimates for each
    recovered ``k`` over the bins that found it, and subtracts the average
    signature from ``U_c(M_c k)`` for every ``c``. Bins whose RMS falls below
    ``rel_tol`` times the largest initial magnitude count as empty.
    """
    plan = bank.plan
    code = plan.code
    C, nb = plan.C, 1 << plan.b
    residual = np.array(bank.spectra, dtype=float, copy=True)  # (C, p+1, 2**b)
    scale = float(np.max(np.abs(residual))) if residual.size else 0.0
    floor = residual.shape[1] * (rel_tol * scale) ** 2

    out = RecoveredSpectrum(plan.n)
    active = {(c, j) for c in range(C) for j in range(nb)}
    sig_cache: dict[BinaryVector, np.ndarray] = {}
    bins_cache: dict[BinaryVector, list[int]] = {}

    def sig_of(k):
        if k not in sig_cache:
            sig_cache[k] = signature(code, k)
        return sig_cache[k]

    def bins_of(k):
        if k not in bins_cache:
            bins_cache[k] = [gf2_matvec_int(M, k) for M in plan.subsamplers]
        return bins_cache[k]

    converged = False
    rnd = 0
    while rnd < max_rounds:
        if not active:
            converged = True
            break
        rnd += 1
        found: dict[BinaryVector, list[tuple[float, float]]] = {}
        for c, j in sorted(active):
            obs = residual[c, :, j]
            if obs @ obs <= floor or correlation_bound(obs) <= gamma:
                active.discard((c, j))
                continue
            k = _try_decode(obs, code, chase_depth)
            if k is None or bins_of(k)[c] != j:
                active.discard((c, j))
                continue
            sig = sig_of(k)
            corr = correlation(sig, obs)
            if corr <= gamma:
                active.discard((c, j))
                continue
            found.setdefault(k, []).append((float(sig @ obs) / sig.size, corr))
        if not found:
            converged = True
            break
        for k in sorted(found):
            msgs = found[k]
            mu = float(np.mean([m for m, _ in msgs]))
            if k in out.entries:
                out.entries[k] += mu
                out.diagnostics[k].hits += len(msgs)
            else:
                out.entries[k] = mu
                out.diagnostics[k] = EntryInfo(rnd, max(cr for _, cr in msgs), len(msgs))
            sig = sig_of(k)
            for c, j in enumerate(bins_of(k)):
                residual[c, :, j] -= mu * sig
                active.add((c, j))
    else:
        converged = not active

    out.converged = converged
    out.rounds = rnd
    if not converged:
        log.warning("message passing stopped after %d rounds with %d active bins", rnd, len(active))
    return out


def residual_energy(bank: SampleBank, spectrum: RecoveredSpectrum) -> np.ndarray:
    """Per-bin energy left after subtracting ``spectrum`` from the bank."""
    plan = bank.plan
    res = np.array(bank.spectra, copy=True)
    for k, v in spectrum.entries.items():
        sig = signature(plan.code, k)
        for c, M in enumerate(plan.subsamplers):
            res[c, :, gf2_matvec_int(M, k)] -= v * sig
    return np.einsum("cij,cij->cj", res, res)

