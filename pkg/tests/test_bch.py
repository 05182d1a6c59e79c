import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spex.bch import (HardWord, UndecodableBinError, bch_generator, chase_patterns, clmul, construct_bch,
                      decode_parity, encode, field, hard_decode, hard_input_from_ratios, signature,
                      soft_decode_chase)
from spex.gf2 import BinaryVector, gf2_matvec


def _poly_eval(gf, poly: int, x: int) -> int:
    acc = 0
    for i in range(poly.bit_length() - 1, -1, -1):
        acc = gf.mul(acc, x) ^ ((poly >> i) & 1)
    return acc


@pytest.mark.parametrize("m", range(2, 17))
def test_field_tables_are_consistent(m):
    gf = field(m)
    assert len(set(gf.exp[: gf.order].tolist())) == gf.order  # alpha is primitive
    for a in (1, 2, gf.order):
        for b in (1, 3, gf.order // 2 + 1):
            if gf.mul(a, b):
                assert gf.div(gf.mul(a, b), b) == a


@pytest.mark.parametrize("m,t", [(4, 1), (4, 2), (5, 3), (6, 5), (8, 5), (10, 5)])
def test_generator_has_consecutive_roots(m, t):
    gf = field(m)
    g = bch_generator(m, t)
    assert all(_poly_eval(gf, g, gf.alpha_pow(i)) == 0 for i in range(1, 2 * t + 1))
    # divides x^(2^m - 1) + 1
    full = (1 << gf.order) | 1
    rem = full
    while rem.bit_length() >= g.bit_length():
        rem ^= g << (rem.bit_length() - g.bit_length())
    assert rem == 0


def test_known_code_parameters():
    assert bch_generator(4, 2) == 0b111010001  # (15, 7) double-error-correcting code
    assert [construct_bch(n, 5).p for n in (8, 12, 37, 93, 216, 467, 974)] == [20, 27, 35, 40, 45, 50, 55]
    code = construct_bch(1992, 5)
    assert (code.m, code.k_c >= 1992) == (11, True)


def test_smallest_field_is_chosen():
    code = construct_bch(11, 5)
    assert code.m == 5 and code.k_c >= 11
    assert construct_bch(12, 5).m == 6


def test_clmul():
    assert clmul(0b11, 0b11) == 0b101
    assert clmul(0, 0b1011) == 0


def test_unservable_request():
    with pytest.raises(ValueError):
        construct_bch(10**6, 5)
    with pytest.raises(ValueError):
        construct_bch(10, 0)


@given(st.integers(1, 300), st.integers(1, 6), st.data())
def test_encode_decode_within_radius(n, t, data):
    code = construct_bch(n, t)
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    word = encode(code, BinaryVector.from_bits(rng.integers(0, 2, n)))
    bits = word.to_bits()
    errs = rng.choice(n + code.p, size=int(rng.integers(0, t + 1)), replace=False)
    bits[errs] ^= 1
    got = hard_decode(code, HardWord(BinaryVector.from_bits(bits), n))
    assert got == BinaryVector.from_bits(word.to_bits()[:n])


@given(st.integers(1, 200), st.data())
def test_sampling_view_recovers_low_weight_k(n, data):
    """Message part zero, parity ``P k + e``: recoverable when ``|k| + |e| <= t``."""
    t = 5
    code = construct_bch(n, t)
    wk = data.draw(st.integers(0, min(t, n)))
    we = data.draw(st.integers(0, t - wk))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    k = BinaryVector.from_indices(n, rng.choice(n, size=wk, replace=False))
    parity = gf2_matvec(code.parity, k).to_bits()
    parity[rng.choice(code.p, size=we, replace=False)] ^= 1
    out = decode_parity(code, parity)
    assert out is not None and np.array_equal(out, k.to_bits())


def test_codewords_satisfy_parity_columns():
    code = construct_bch(30, 3)
    for i in range(30):
        e = BinaryVector.from_indices(30, [i])
        assert np.array_equal(encode(code, e).to_bits()[30:], code.parity_bits[:, i])


def test_signature_layout():
    code = construct_bch(20, 2)
    k = BinaryVector.from_indices(20, [3, 7])
    sig = signature(code, k)
    assert sig.shape == (code.p + 1,) and sig[0] == 1.0
    assert np.array_equal(sig[1:] < 0, gf2_matvec(code.parity, k).to_bits().astype(bool))


def test_hard_input_from_ratios():
    code = construct_bch(10, 2)
    k = BinaryVector.from_indices(10, [1, 4])
    obs = -0.7 * signature(code, k)
    word = hard_input_from_ratios(obs, 10)
    assert not word.message.any()
    assert np.array_equal(word.parity, gf2_matvec(code.parity, k).to_bits())
    assert hard_decode(code, word) == k
    obs[0] = 0.0
    with pytest.raises(UndecodableBinError):
        hard_input_from_ratios(obs, 10)


def test_decoder_reports_failure_on_garbage():
    code = construct_bch(100, 5)
    rng = np.random.default_rng(0)
    outcomes = [decode_parity(code, rng.integers(0, 2, code.p)) for _ in range(200)]
    # random words are mostly farther than t from any codeword
    assert sum(o is None for o in outcomes) > 150


def test_chase_patterns_order_and_tie_rule():
    llrs = np.array([0.9, -0.1, 0.5, 2.0, -0.3, 1.5])
    pats = chase_patterns(llrs, 2)
    assert [sorted(p.tolist()) for p in pats] == [[], [1], [4], [1, 4]]
    assert [p.tolist() for p in chase_patterns(np.ones(8), 4)] == [[]]


def test_chase_recovers_beyond_hard_radius():
    n, t = 60, 3
    code = construct_bch(n, t)
    rng = np.random.default_rng(4)
    k = BinaryVector.from_indices(n, [5, 17])
    llrs = signature(code, k)[1:] * rng.uniform(0.8, 1.2, code.p)
    flips = rng.choice(code.p, size=t - 1, replace=False)
    llrs[flips] *= -0.05  # two sign errors with low reliability: |k| + |e| = t + 1
    assert decode_parity(code, llrs < 0) is None or not np.array_equal(decode_parity(code, llrs < 0), k.to_bits())
    assert soft_decode_chase(code, llrs, depth=4) == k


def test_chase_validates_arguments():
    code = construct_bch(10, 2)
    with pytest.raises(ValueError):
        soft_decode_chase(code, np.ones(code.p), depth=0)
    with pytest.raises(ValueError):
        soft_decode_chase(code, np.ones(code.p + 1))
