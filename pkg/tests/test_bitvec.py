import random

import pytest
from hypothesis import given, strategies as st

from efset.bitvec import BitVector, select_in_int, select_in_word
from efset.errors import FormatError, RangeError, StaleIndexError

from conftest import SAMPLE_H_ONES


@pytest.fixture
def sample_h():
    return BitVector.from_positions(20, SAMPLE_H_ONES).freeze()


def test_set_bit_single():
    bv = BitVector(8)
    bv.set_bit(3)
    assert bv.to_bitstring() == "00010000"
    assert bv.ones == 1


def test_set_bit_idempotent():
    bv = BitVector(8)
    bv.set_bit(5)
    bv.set_bit(5)
    assert bv.ones == 1


def test_set_bit_out_of_range():
    with pytest.raises(RangeError):
        BitVector(8).set_bit(8)


def test_sample_h(sample_h):
    assert sample_h.ones == 12
    assert sample_h.to_bitstring() == "11101110101011001010"


@pytest.mark.parametrize("pos, want", [(0, 0), (13, 9), (20, 12)])
def test_rank1_sample(sample_h, pos, want):
    assert sample_h.rank1(pos) == want


@pytest.mark.parametrize("i, want", [(0, 0), (8, 12), (11, 18)])
def test_select1_sample(sample_h, i, want):
    assert sample_h.select1(i) == want


@pytest.mark.parametrize("i, want", [(0, 3), (2, 9)])
def test_select0_sample(sample_h, i, want):
    assert sample_h.select0(i) == want


def test_select0_without_zeros():
    bv = BitVector.from_positions(10, range(10)).freeze()
    with pytest.raises(RangeError):
        bv.select0(0)


def test_rank_past_end(sample_h):
    with pytest.raises(RangeError):
        sample_h.rank1(21)


def test_stale_index():
    bv = BitVector.from_positions(100, [1, 50]).freeze()
    bv.set_bit(7)
    with pytest.raises(StaleIndexError):
        bv.rank1(10)
    bv.freeze()
    assert bv.rank1(10) == 2


def test_unindexed_query():
    with pytest.raises(StaleIndexError):
        BitVector.from_positions(10, [2]).select1(0)


def test_select_in_word():
    word = 0b1011_0000_0001
    assert [select_in_word(word, r) for r in range(4)] == [0, 8, 9, 11]
    x = (1 << 200) | (1 << 70) | 1
    assert [select_in_int(x, r) for r in range(3)] == [0, 70, 200]


@given(st.lists(st.booleans(), max_size=3000))
def test_rank_select_against_scan(bits):
    bv = BitVector.from_positions(len(bits), [i for i, b in enumerate(bits) if b]).freeze()
    ones = [i for i, b in enumerate(bits) if b]
    zeros = [i for i, b in enumerate(bits) if not b]
    for i, p in enumerate(ones):
        assert bv.select1(i) == p
    for i, p in enumerate(zeros):
        assert bv.select0(i) == p
    acc = 0
    for p in range(len(bits) + 1):
        assert bv.rank1(p) == acc
        if p < len(bits):
            acc += bits[p]


def test_large_random_against_scan():
    rng = random.Random(7)
    n = 200_000
    ones = sorted(rng.sample(range(n), n // 3))
    bv = BitVector.from_positions(n, ones).freeze()
    for _ in range(2000):
        i = rng.randrange(len(ones))
        assert bv.select1(i) == ones[i]
    zeros = sorted(set(range(n)) - set(ones))
    for _ in range(2000):
        i = rng.randrange(len(zeros))
        assert bv.select0(i) == zeros[i]


@given(st.lists(st.booleans(), max_size=1000))
def test_serialization_round_trip(bits):
    bv = BitVector.from_positions(len(bits), [i for i, b in enumerate(bits) if b])
    data = bv.to_bytes()
    back, end = BitVector.from_bytes(data)
    assert end == len(data)
    assert back == bv
    assert back.to_bytes() == data


def test_bad_magic():
    data = bytearray(BitVector(5).to_bytes())
    data[0:4] = b"XXXX"
    with pytest.raises(FormatError):
        BitVector.from_bytes(bytes(data))
