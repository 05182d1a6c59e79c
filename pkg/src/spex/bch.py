"""Shortened primitive narrow-sense binary BCH codes.

Coordinates
-----------
A codeword of the length-``n_c`` cyclic code is a polynomial ``c(x)`` over
GF(2). Parity symbol ``r`` sits at degree ``r`` (``0 <= r < p``) and message
symbol ``i`` at degree ``p + i``. Systematic encoding uses
``x**(p+i) mod g(x)`` as column ``i`` of the parity matrix ``P``, so every
codeword is ``[k ; P k]`` as in ``G = [I ; P]``. Shortening keeps the first
``n`` message symbols; the others are fixed to zero.

Hard words are laid out as ``n`` message bits followed by ``p`` parity bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gf2 import BinaryMatrix, BinaryVector, gf2_matvec, pack_bits

MAX_M = 16

# Primitive polynomials over GF(2), bit d = coefficient of x**d.
PRIMITIVE_POLYS = {
    2: 0x7,       # x^2 + x + 1
    3: 0xB,       # x^3 + x + 1
    4: 0x13,      # x^4 + x + 1
    5: 0x25,      # x^5 + x^2 + 1
    6: 0x43,      # x^6 + x + 1
    7: 0x89,      # x^7 + x^3 + 1
    8: 0x11D,     # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,     # x^9 + x^4 + 1
    10: 0x409,    # x^10 + x^3 + 1
    11: 0x805,    # x^11 + x^2 + 1
    12: 0x1053,   # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,   # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,   # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,   # x^15 + x + 1
    16: 0x1100B,  # x^16 + x^12 + x^3 + x + 1
}


class UndecodableBinError(ValueError):
    """The unshifted bin value is zero, so sign ratios are undefined."""


class GF2m:
    """GF(2**m) with log/antilog tables generated by a primitive polynomial."""

    def __init__(self, m: int, poly: int | None = None):
        if poly is None:
            poly = PRIMITIVE_POLYS[m]
        self.m = m
        self.poly = poly
        self.order = (1 << m) - 1
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(self.order + 1, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            if log[x] != -1:
                raise ValueError(f"polynomial {poly:#x} is not primitive for m={m}")
            exp[i] = x
            log[x] = i
            x <<= 1
            if x >> m:
                x ^= poly
        exp[self.order:] = exp[: self.order]
        self.exp = exp
        self.log = log
        self._exp = exp.tolist()
        self._log = log.tolist()

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(2^m)")
        if a == 0:
            return 0
        return self._exp[(self._log[a] - self._log[b]) % self.order]

    def alpha_pow(self, e: int) -> int:
        return self._exp[e % self.order]

    def minimal_poly(self, e: int) -> int:
        """Minimal polynomial of ``alpha**e`` as a GF(2) bit polynomial."""
        coset = []
        c = e % self.order
        while c not in coset:
            coset.append(c)
            c = (2 * c) % self.order
        coeffs = [1]  # low -> high, GF(2^m) entries
        for c in coset:
            root = self.alpha_pow(c)
            nxt = [0] * (len(coeffs) + 1)
            for i, a in enumerate(coeffs):
                nxt[i + 1] ^= a
                nxt[i] ^= self.mul(a, root)
            coeffs = nxt
        if any(a not in (0, 1) for a in coeffs):
            raise AssertionError("minimal polynomial left GF(2)")
        return sum(a << i for i, a in enumerate(coeffs))


@lru_cache(maxsize=None)
def field(m: int) -> GF2m:
    return GF2m(m)


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) bit polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def bch_generator(m: int, t: int) -> int:
    """Generator polynomial of the narrow-sense primitive BCH code, designed distance 2t+1."""
    gf = field(m)
    g = 1
    seen: set[int] = set()
    for e in range(1, 2 * t + 1, 2):
        rep = min((e << i) % gf.order for i in range(m))
        if rep in seen:
            continue
        seen.add(rep)
        g = clmul(g, gf.minimal_poly(e))
    return g


@dataclass(frozen=True, eq=False)
class BchCode:
    m: int
    n_c: int
    k_c: int
    t: int
    p: int
    n: int
    generator: int
    parity: BinaryMatrix  # p x n

    @property
    def field(self) -> GF2m:
        return field(self.m)

    @property
    def parity_bits(self) -> np.ndarray:
        return self.parity.to_bits()


@lru_cache(maxsize=64)
def _construct(n: int, t: int, m: int | None) -> BchCode:
    ms = [m] if m is not None else range(2, MAX_M + 1)
    for mm in ms:
        n_c = (1 << mm) - 1
        if 2 * t + 1 > n_c:
            continue
        g = bch_generator(mm, t)
        p = g.bit_length() - 1
        k_c = n_c - p
        if k_c < n:
            continue
        cols = []
        rem = _polymod(1 << p, g)
        for _ in range(n):
            cols.append(rem)
            rem <<= 1
            if (rem >> p) & 1:
                rem ^= g
        nb = max(1, (p + 7) // 8)
        raw = b"".join(c.to_bytes(nb, "little") for c in cols)
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(n, nb), axis=1, bitorder="little")
        parity = np.ascontiguousarray(bits[:, :p].T)
        return BchCode(m=mm, n_c=n_c, k_c=k_c, t=t, p=p, n=n, generator=g,
                       parity=BinaryMatrix(pack_bits(parity), p, n))
    raise ValueError(f"no BCH code with m <= {MAX_M} serves n={n}, t={t}")


def _polymod(a: int, g: int) -> int:
    dg = g.bit_length() - 1
    while a.bit_length() - 1 >= dg and a:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def construct_bch(n: int, t: int, m: int | None = None) -> BchCode:
    """Smallest-``m`` BCH code with dimension at least ``n`` correcting ``t`` errors,
    shortened to ``n`` message symbols.

    Passing ``m`` forces the extension degree (used to compare against the
    unshortened code).
    """
    if n < 1 or t < 1:
        raise ValueError(f"need n >= 1 and t >= 1, got n={n}, t={t}")
    if m is not None and not 2 <= m <= MAX_M:
        raise ValueError(f"m must lie in [2, {MAX_M}]")
    return _construct(int(n), int(t), m)


def encode(code: BchCode, k: BinaryVector) -> BinaryVector:
    """Systematic codeword ``[k ; P k]`` of length ``n + p``."""
    pk = gf2_matvec(code.parity, k)
    return BinaryVector.from_bits(np.concatenate([k.to_bits(), pk.to_bits()]))


def signature(code: BchCode, k: BinaryVector) -> np.ndarray:
    """``(-1)**<p_i, k>`` for the shifts ``[0, p_1, ..., p_p]``; length ``p + 1``."""
    pk = gf2_matvec(code.parity, k).to_bits()
    return np.concatenate([[1.0], 1.0 - 2.0 * pk])


@dataclass(frozen=True)
class HardWord:
    """Received word: ``n`` message bits (zero before decoding) then ``p`` parity bits."""

    bits: BinaryVector
    n: int

    @property
    def message(self) -> np.ndarray:
        return self.bits.to_bits()[: self.n]

    @property
    def parity(self) -> np.ndarray:
        return self.bits.to_bits()[self.n:]


def hard_input_from_ratios(observation, n: int) -> HardWord:
    """Nearest-neighbour hard decision on ``U_i / U_0``.

    ``observation[0]`` is the unshifted bin value; entries ``1..p`` are the
    shifted ones. Parity bit ``i`` is 1 when the ratio is negative.
    """
    obs = np.asarray(observation, dtype=float)
    if obs[0] == 0:
        raise UndecodableBinError("unshifted bin value is zero")
    parity = (obs[1:] / obs[0]) < 0
    bits = np.concatenate([np.zeros(n, dtype=np.uint8), parity.astype(np.uint8)])
    return HardWord(BinaryVector.from_bits(bits), n)


def _berlekamp_massey(gf: GF2m, S: list[int]) -> list[int]:
    C = [1]
    B = [1]
    L = 0
    shift = 1
    b = 1
    for r in range(len(S)):
        d = S[r]
        for i in range(1, L + 1):
            if i < len(C):
                d ^= gf.mul(C[i], S[r - i])
        if d == 0:
            shift += 1
            continue
        coef = gf.div(d, b)
        T = C[:]
        need = len(B) + shift
        if len(C) < need:
            C = C + [0] * (need - len(C))
        for i, bi in enumerate(B):
            C[i + shift] ^= gf.mul(coef, bi)
        if 2 * L <= r:
            L = r + 1 - L
            B = T
            b = d
            shift = 1
        else:
            shift += 1
    del C[L + 1:]
    C += [0] * (L + 1 - len(C))
    return C


class _Decoder:
    """Per-code precomputation for Berlekamp-Massey + Chien search."""

    def __init__(self, code: BchCode):
        self.code = code
        self.gf = code.field
        self.positions = np.arange(code.n + code.p, dtype=np.int64)
        self.syn_exps = np.arange(1, 2 * code.t + 1, dtype=np.int64)

    def decode(self, parity: np.ndarray, message: np.ndarray | None = None) -> np.ndarray | None:
        """Message bits of the nearest codeword within distance t, else ``None``."""
        code, gf = self.code, self.gf
        p, n = code.p, code.n
        degs = np.flatnonzero(parity)
        if message is not None and message.any():
            degs = np.concatenate([degs, p + np.flatnonzero(message)])
        if degs.size == 0:
            return np.zeros(n, dtype=np.uint8)
        idx = (self.syn_exps[:, None] * degs[None, :]) % gf.order
        S = np.bitwise_xor.reduce(gf.exp[idx], axis=1).tolist()
        if not any(S):
            msg = np.zeros(n, dtype=np.uint8) if message is None else message.astype(np.uint8)
            return msg
        lam = _berlekamp_massey(gf, S)
        L = len(lam) - 1
        if L > code.t or L == 0:
            return None
        acc = np.ones(self.positions.size, dtype=np.int64)
        for i in range(1, L + 1):
            if lam[i]:
                acc ^= gf.exp[(gf.log[lam[i]] - i * self.positions) % gf.order]
        roots = np.flatnonzero(acc == 0)
        if roots.size != L:
            return None
        msg = np.zeros(n, dtype=np.uint8) if message is None else message.astype(np.uint8).copy()
        in_msg = roots[roots >= p] - p
        msg[in_msg] ^= 1
        return msg


@lru_cache(maxsize=64)
def _decoder(code: BchCode) -> _Decoder:
    return _Decoder(code)


def decode_parity(code: BchCode, parity, message=None) -> np.ndarray | None:
    """Array-level decoder; returns the ``n`` message bits or ``None``."""
    parity = np.asarray(parity, dtype=bool)
    if parity.size != code.p:
        raise ValueError(f"expected {code.p} parity bits, got {parity.size}")
    msg = None if message is None else np.asarray(message, dtype=np.uint8)
    return _decoder(code).decode(parity, msg)


def hard_decode(code: BchCode, word: HardWord | BinaryVector) -> BinaryVector | None:
    """Berlekamp-Massey + Chien search; the decoded message or ``None`` on failure."""
    bits = word.bits if isinstance(word, HardWord) else word
    if bits.length != code.n + code.p:
        raise ValueError(f"word length {bits.length} != n + p = {code.n + code.p}")
    arr = bits.to_bits()
    out = decode_parity(code, arr[code.n:], arr[: code.n])
    return None if out is None else BinaryVector.from_bits(out)


def chase_patterns(llrs: np.ndarray, depth: int) -> list[np.ndarray]:
    """Flip sets over the ``depth`` least reliable positions, most likely first.

    A flip set's cost is the sum of ``|llr|`` over flipped positions; ties keep
    enumeration order, so the output is deterministic. Only positions strictly
    less reliable than the median are candidates: when reliabilities tie (a
    clean signature) there is nothing to prefer and flipping would only
    manufacture wrong codewords.
    """
    rel = np.abs(llrs)
    weak = np.argsort(rel, kind="stable")[:min(depth, rel.size)]
    weak = weak[rel[weak] < np.median(rel)]
    d = weak.size
    masks = np.arange(1 << d)
    sel = (masks[:, None] >> np.arange(d)[None, :]) & 1
    cost = sel @ rel[weak]
    order = np.argsort(cost, kind="stable")
    return [weak[sel[i].astype(bool)] for i in order]


def soft_decode_chase(code: BchCode, llrs, depth: int = 6, skip_first: bool = False) -> BinaryVector | None:
    """Chase decoding: hard-decode up to ``2**depth`` most likely hard inputs.

    Positive ``llr`` favours parity bit 0. ``skip_first`` drops the unflipped
    word when the caller already tried it.
    """
    if depth < 1:
        raise ValueError("chase depth must be >= 1")
    llrs = np.asarray(llrs, dtype=float)
    if llrs.size != code.p:
        raise ValueError(f"expected {code.p} llrs, got {llrs.size}")
    base = llrs < 0
    dec = _decoder(code)
    for attempt, flips in enumerate(chase_patterns(llrs, depth)):
        if skip_first and attempt == 0:
            continue
        word = base.copy()
        word[flips] ^= True
        out = dec.decode(word)
        if out is not None:
            return BinaryVector.from_bits(out)
    return None
