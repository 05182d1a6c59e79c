"""Boolean (Walsh-Hadamard) Fourier transforms.

Arrays of length ``2**d`` are indexed by the integer form of a bit vector
(bit ``i`` of the index = feature ``i``). The forward transform carries the
``1/2**d`` factor::

    F(k) = 2**-d * sum_m (-1)**<k, m> f(m)
    f(m) = sum_k (-1)**<m, k> F(k)
"""

from __future__ import annotations

import numpy as np

BRUTE_FORCE_CAP = 20


def _dim(length: int) -> int:
    d = length.bit_length() - 1
    if length < 1 or (1 << d) != length:
        raise ValueError(f"length {length} is not a power of two")
    return d


def _butterfly(x: np.ndarray) -> np.ndarray:
    # in-place on the last axis, unnormalized
    size = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < size:
        y = x.reshape(*lead, size // (2 * h), 2, h)
        a = y[..., 0, :].copy()
        y[..., 0, :] += y[..., 1, :]
        y[..., 1, :] = a - y[..., 1, :]
        h *= 2
    return x


def wht_forward(samples) -> np.ndarray:
    """Normalized fast transform along the last axis, O(d 2**d) per row."""
    x = np.array(samples, dtype=float, copy=True)
    _dim(x.shape[-1])
    return _butterfly(x) / x.shape[-1]


def wht_inverse(spectrum) -> np.ndarray:
    x = np.array(spectrum, dtype=float, copy=True)
    _dim(x.shape[-1])
    return _butterfly(x)


def naive_wht(samples) -> np.ndarray:
    """O(4**d) double sum; reference for the fast transform."""
    f = np.asarray(samples, dtype=float)
    size = f.shape[-1]
    d = _dim(size)
    idx = np.arange(size)
    bits = (idx[:, None] >> np.arange(d)) & 1
    signs = 1.0 - 2.0 * ((bits @ bits.T) & 1)
    return f @ signs / size


def all_masks(n: int) -> np.ndarray:
    """Every mask of ``n`` features as a ``(2**n, n)`` uint8 array, row ``i`` = integer ``i``."""
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"refusing to enumerate 2**{n} masks (cap is n <= {BRUTE_FORCE_CAP})")
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def brute_force_spectrum(oracle, n: int) -> np.ndarray:
    """Query all ``2**n`` masks and transform. ``n`` is capped at 20."""
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"brute force is capped at n <= {BRUTE_FORCE_CAP}, got {n}")
    values = np.asarray(oracle(all_masks(n)), dtype=float)
    return wht_forward(values)

