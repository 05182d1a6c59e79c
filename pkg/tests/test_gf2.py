import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spex.gf2 import (BinaryMatrix, BinaryVector, dot_parity, gf2_matvec, gf2_matvec_int, gf2_matvec_t,
                      hamming_weight, pack_bits, random_binary_matrix, row_parity, unpack_bits)

bit_arrays = st.integers(1, 200).flatmap(lambda n: arrays(np.uint8, n, elements=st.integers(0, 1)))


@given(bit_arrays)
def test_pack_unpack_round_trip(bits):
    assert np.array_equal(unpack_bits(pack_bits(bits), bits.size), bits)


@given(bit_arrays)
def test_vector_string_int_conventions(bits):
    v = BinaryVector.from_bits(bits)
    text = "".join(map(str, bits))
    assert str(v) == text
    assert BinaryVector.from_string(text) == v
    assert v.to_int() == sum(int(b) << i for i, b in enumerate(bits))
    assert BinaryVector.from_int(bits.size, v.to_int()) == v
    assert v.weight == hamming_weight(v) == int(bits.sum())
    assert v.support() == np.flatnonzero(bits).tolist()


def test_feature_one_is_first_character():
    v = BinaryVector.from_indices(5, [0, 3])
    assert str(v) == "10010"
    assert v[0] == 1 and v[1] == 0 and v[3] == 1
    assert v.to_int() == 0b01001


@given(bit_arrays, st.data())
def test_xor_and_or_match_numpy(a, data):
    b = data.draw(arrays(np.uint8, a.size, elements=st.integers(0, 1)))
    va, vb = BinaryVector.from_bits(a), BinaryVector.from_bits(b)
    assert np.array_equal((va ^ vb).to_bits(), a ^ b)
    assert np.array_equal((va & vb).to_bits(), a & b)
    assert np.array_equal((va | vb).to_bits(), a | b)
    assert dot_parity(va, vb) == int(a.astype(int) @ b.astype(int)) % 2


def test_hash_and_equality_respect_length():
    assert BinaryVector.zeros(3) != BinaryVector.zeros(4)
    assert len({BinaryVector.from_string("0110"), BinaryVector.from_string("0110")}) == 1


def test_ordering_by_weight_then_string():
    vs = [BinaryVector.from_string(s) for s in ("110", "001", "000", "100")]
    assert [str(v) for v in sorted(vs)] == ["000", "001", "100", "110"]


def test_invalid_inputs():
    with pytest.raises(ValueError):
        BinaryVector.from_string("01a")
    with pytest.raises(ValueError):
        BinaryVector.from_int(3, 8)
    with pytest.raises(ValueError):
        BinaryVector.from_bits([1, 0]) ^ BinaryVector.from_bits([1, 0, 1])
    with pytest.raises(ValueError):
        BinaryVector(np.array([0b1000], dtype=np.uint64), 3)


@given(st.integers(1, 12), st.integers(1, 150), st.integers(0, 2**32 - 1))
def test_matvec_matches_dense_mod_two(rows, cols, seed):
    M = random_binary_matrix(rows, cols, seed)
    rng = np.random.default_rng(seed)
    v = rng.integers(0, 2, cols).astype(np.uint8)
    w = rng.integers(0, 2, rows).astype(np.uint8)
    dense = M.to_bits().astype(int)
    assert np.array_equal(gf2_matvec(M, BinaryVector.from_bits(v)).to_bits(), dense @ v % 2)
    assert np.array_equal(gf2_matvec_t(M, BinaryVector.from_bits(w)).to_bits(), dense.T @ w % 2)
    j = gf2_matvec_int(M, BinaryVector.from_bits(v))
    assert j == sum(int(b) << i for i, b in enumerate(dense @ v % 2))


def test_matrix_round_trips():
    M = random_binary_matrix(4, 70, 1)
    assert BinaryMatrix.from_strings(M.to_strings()) == M
    assert BinaryMatrix.from_rows([M.row(i) for i in range(4)]) == M
    assert M.shape == (4, 70)


def test_row_parity():
    bits = np.array([[1, 1, 0], [1, 1, 1], [0, 0, 0]], dtype=np.uint8)
    assert np.array_equal(row_parity(pack_bits(bits)), [0, 1, 0])


def test_random_matrix_is_seeded():
    assert random_binary_matrix(6, 90, 5) == random_binary_matrix(6, 90, 5)
    assert random_binary_matrix(6, 90, 5) != random_binary_matrix(6, 90, 6)
