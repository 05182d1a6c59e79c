"""Bit-packed vectors and matrices over GF(2).

Bit order
---------
Bit index ``i`` (0-based) is feature ``i + 1``. Bits are packed little-endian
into ``uint64`` words: bit ``i`` lives in word ``i // 64`` at position
``i % 64``. Bits past the declared length are always zero.

The text form of a vector is a 0/1 string whose character ``i`` is bit ``i``,
so the first feature is printed first. Integer conversions (:meth:`to_int`,
:meth:`from_int`) use the same order: bit ``i`` of the vector is bit ``i`` of
the integer. Fourier/bin arrays of length ``2**b`` are indexed by that integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WORD = 64


def n_words(length: int) -> int:
    return (length + WORD - 1) // WORD


def pack_bits(bits) -> np.ndarray:
    """Pack a ``(..., n)`` 0/1 array into ``(..., ceil(n/64))`` uint64 words."""
    bits = np.asarray(bits)
    n = bits.shape[-1]
    w = n_words(n)
    padded = np.zeros(bits.shape[:-1] + (w * WORD,), dtype=np.uint8)
    padded[..., :n] = bits != 0
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, length: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a uint8 array of shape ``(..., length)``."""
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :length]


def row_parity(words: np.ndarray) -> np.ndarray:
    """Parity of the set bits along the last (word) axis."""
    return (np.bitwise_count(words).sum(axis=-1, dtype=np.int64) & 1).astype(np.uint8)


def _check_length(length: int) -> None:
    if length < 0:
        raise ValueError(f"negative length {length}")


@dataclass(frozen=True, eq=False)
class BinaryVector:
    """Immutable bit vector over GF(2).

    Use the ``from_*`` constructors; ``words`` must already be masked.
    """

    words: np.ndarray
    length: int
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_length(self.length)
        words = np.asarray(self.words, dtype=np.uint64)
        if words.shape != (n_words(self.length),):
            raise ValueError(f"expected {n_words(self.length)} words for length {self.length}, got {words.shape}")
        rem = self.length % WORD
        if rem and int(words[-1]) >> rem:
            raise ValueError("bits set beyond declared length")
        words = words.copy()
        words.setflags(write=False)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "_hash", hash((self.length, words.tobytes())))

    @classmethod
    def zeros(cls, length: int) -> BinaryVector:
        return cls(np.zeros(n_words(length), dtype=np.uint64), length)

    @classmethod
    def from_bits(cls, bits) -> BinaryVector:
        bits = np.asarray(bits).ravel()
        return cls(pack_bits(bits), bits.size)

    @classmethod
    def from_string(cls, text: str) -> BinaryVector:
        if any(ch not in "01" for ch in text):
            raise ValueError(f"not a 0/1 string: {text!r}")
        return cls.from_bits(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_int(cls, length: int, value: int) -> BinaryVector:
        _check_length(length)
        if value < 0 or value >> length:
            raise ValueError(f"{value} does not fit in {length} bits")
        raw = value.to_bytes(8 * n_words(length), "little")
        return cls(np.frombuffer(raw, dtype="<u8").astype(np.uint64), length)

    @classmethod
    def from_indices(cls, length: int, indices) -> BinaryVector:
        bits = np.zeros(length, dtype=np.uint8)
        bits[list(indices)] = 1
        return cls.from_bits(bits)

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.length)

    def to_int(self) -> int:
        return int.from_bytes(self.words.astype("<u8").tobytes(), "little")

    def support(self) -> list[int]:
        return np.flatnonzero(self.to_bits()).tolist()

    @property
    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (int(self.words[i // WORD]) >> (i % WORD)) & 1

    def _same_len(self, other: BinaryVector) -> None:
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")

    def __xor__(self, other: BinaryVector) -> BinaryVector:
        self._same_len(other)
        return BinaryVector(self.words ^ other.words, self.length)

    def __and__(self, other: BinaryVector) -> BinaryVector:
        self._same_len(other)
        return BinaryVector(self.words & other.words, self.length)

    def __or__(self, other: BinaryVector) -> BinaryVector:
        self._same_len(other)
        return BinaryVector(self.words | other.words, self.length)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryVector):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: BinaryVector) -> bool:
        # weight first, then text; gives a readable canonical order
        return (self.weight, str(self)) < (other.weight, str(other))

    def __str__(self) -> str:
        return (self.to_bits() + ord("0")).tobytes().decode("ascii")

    def __repr__(self) -> str:
        return f"BinaryVector('{self}')"


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    """Immutable row-major bit matrix; ``data`` has shape ``(rows, words)``."""

    data: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.uint64).reshape(self.rows, n_words(self.cols))
        rem = self.cols % WORD
        if rem and self.rows and np.any(data[:, -1] >> np.uint64(rem)):
            raise ValueError("bits set beyond declared column count")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_bits(cls, bits) -> BinaryMatrix:
        bits = np.atleast_2d(np.asarray(bits))
        return cls(pack_bits(bits), bits.shape[0], bits.shape[1])

    @classmethod
    def from_rows(cls, rows: list[BinaryVector], cols: int | None = None) -> BinaryMatrix:
        if cols is None:
            if not rows:
                raise ValueError("cols required for an empty row list")
            cols = rows[0].length
        if any(r.length != cols for r in rows):
            raise ValueError("rows must share one length")
        data = np.array([r.words for r in rows], dtype=np.uint64).reshape(len(rows), n_words(cols))
        return cls(data, len(rows), cols)

    @classmethod
    def from_strings(cls, rows: list[str]) -> BinaryMatrix:
        return cls.from_rows([BinaryVector.from_string(r) for r in rows])

    def row(self, i: int) -> BinaryVector:
        return BinaryVector(self.data[i], self.cols)

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.data, self.cols)

    def to_strings(self) -> list[str]:
        return [str(self.row(i)) for i in range(self.rows)]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


def gf2_matvec(M: BinaryMatrix, v: BinaryVector) -> BinaryVector:
    """``M @ v`` over GF(2)."""
    if v.length != M.cols:
        raise ValueError(f"matrix has {M.cols} columns, vector has length {v.length}")
    return BinaryVector(pack_bits(row_parity(M.data & v.words)), M.rows)


def gf2_matvec_t(M: BinaryMatrix, v: BinaryVector) -> BinaryVector:
    """``M.T @ v`` over GF(2): XOR of the rows of ``M`` selected by ``v``."""
    if v.length != M.rows:
        raise ValueError(f"matrix has {M.rows} rows, vector has length {v.length}")
    sel = v.to_bits().astype(bool)
    words = np.bitwise_xor.reduce(M.data[sel], axis=0) if sel.any() else np.zeros(n_words(M.cols), dtype=np.uint64)
    return BinaryVector(words, M.cols)


def gf2_matvec_int(M: BinaryMatrix, v: BinaryVector) -> int:
    """``M @ v`` returned as an integer index (bit ``r`` = row ``r``)."""
    if v.length != M.cols:
        raise ValueError(f"matrix has {M.cols} columns, vector has length {v.length}")
    return bits_to_int(row_parity(M.data & v.words))


def bits_to_int(bits) -> int:
    """0/1 sequence to integer, bit ``i`` of the result = ``bits[i]``."""
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def dot_parity(a: BinaryVector, b: BinaryVector) -> int:
    """Inner product ``<a, b>`` over GF(2)."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return int(np.bitwise_count(a.words & b.words).sum()) & 1


def hamming_weight(v: BinaryVector) -> int:
    return v.weight


def random_binary_matrix(rows: int, cols: int, seed) -> BinaryMatrix:
    """Matrix with i.i.d. fair bits.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts, including a
    ``Generator`` (which is then advanced).
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"dimensions must be positive, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    return BinaryMatrix.from_bits(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))
