import bisect
import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from efset.ef_static import (EliasFano, SampledPredecessor, b_bits, ef_bits, ef_bound, join,
                             low_width, split)
from efset.errors import FormatError, OrderingError, RangeError, UniverseError

from conftest import SAMPLE, SAMPLE_H_ONES, SAMPLE_M


def sorted_sets(max_m=1 << 12, max_n=64):
    return st.integers(0, max_m).flatmap(
        lambda m: st.tuples(st.sets(st.integers(0, m), min_size=1, max_size=min(max_n, m + 1)),
                            st.just(m))).map(lambda t: (sorted(t[0]), t[1]))


@pytest.fixture
def t1():
    return EliasFano.encode(SAMPLE, SAMPLE_M)


def test_sample_layout(t1):
    assert t1.ell == 3
    assert list(t1.high.iter_ones()) == SAMPLE_H_ONES
    assert t1.high.to_bitstring() == "11101110101011001010"
    lows = "".join(format(t1._low(i), "03b") for i in range(12))
    assert lows == "011100111101110111101001100110110110"


@pytest.mark.parametrize("i, want", [(0, 3), (8, 36), (11, 62)])
def test_sample_access(t1, i, want):
    assert t1.access(i) == want


@pytest.mark.parametrize("x, want", [(30, 25), (3, None), (0, None), (4, 3), (63, 62), (36, 25)])
def test_sample_predecessor(t1, x, want):
    assert t1.predecessor(x) == want


def test_access_out_of_range(t1):
    with pytest.raises(RangeError):
        t1.access(12)


def test_singleton():
    ef = EliasFano.encode([0], 1)
    assert ef.ell == 0
    assert ef.access(0) == 0
    assert ef.predecessor(1) == 0


def test_rejects_unsorted():
    with pytest.raises(OrderingError) as e:
        EliasFano.encode([1, 5, 4], 10)
    assert e.value.index == 2


def test_rejects_duplicates_when_strict():
    EliasFano.encode([1, 1, 2], 10)
    with pytest.raises(OrderingError):
        EliasFano.encode([1, 1, 2], 10, strict=True)


def test_rejects_value_above_universe():
    with pytest.raises(UniverseError):
        EliasFano.encode([1, 11], 10)


def test_random_round_trip():
    rng = random.Random(1)
    v = sorted(rng.sample(range(1 << 20), 100))
    ef = EliasFano.encode(v, (1 << 20) - 1)
    assert ef.decode() == v
    assert [ef.access(i) for i in range(100)] == v


@given(sorted_sets())
def test_access_and_predecessor_exhaustive(data):
    v, m = data
    ef = EliasFano.encode(v, m)
    assert [ef.access(i) for i in range(len(v))] == v
    for x in range(m + 2):
        j = bisect.bisect_left(v, x)
        assert ef.predecessor(x) == (v[j - 1] if j else None)
        assert ef.successor(x) == (v[j] if j < len(v) else None)


@given(sorted_sets(max_m=1 << 40, max_n=300))
def test_layout_lengths(data):
    v, m = data
    ef = EliasFano.encode(v, m)
    n = len(v)
    assert ef.ell == low_width(n, m)
    assert len(ef.high) == n + max(1 << (n.bit_length() - 1), m >> ef.ell)
    assert ef.payload_bits == len(ef.high) + n * ef.ell


def test_low_width_matches_float_formula():
    rng = random.Random(3)
    for _ in range(2000):
        n = rng.randint(1, 10_000)
        m = rng.randint(n, 1 << 40)
        q = m / n
        # float check away from exact powers of two
        if abs(math.log2(q) - round(math.log2(q))) > 1e-9:
            assert low_width(n, m) == max(0, math.ceil(math.log2(q)))


@pytest.mark.parametrize("n, m, want", [(12, 63, 56), (6, 15, 22), (1, 1, 2), (0, 5, 0)])
def test_ef_bits(n, m, want):
    assert ef_bits(n, m) == want


@given(st.integers(1, 10_000).flatmap(lambda n: st.tuples(st.just(n), st.integers(n, 1 << 40))))
def test_ef_bits_below_bound(nm):
    n, m = nm
    assert ef_bits(n, m) <= ef_bound(n, m)


# frozen values from an exact big-integer binomial (universe [0, m] has m + 1 points)
@pytest.mark.parametrize("n, m, want", [
    (1, 1, 1), (12, 63, 42), (100, 10 ** 6, 1469), (1000, 1 << 30, 21471),
    (5000, 1 << 40, 145768), (1 << 14, 1 << 28, 253005),
])
def test_b_bits(n, m, want):
    assert b_bits(n, m) == want


@given(st.integers(1, 3000).flatmap(lambda n: st.tuples(st.just(n), st.integers(n, 1 << 40))))
def test_b_bits_below_ef(nm):
    n, m = nm
    assert b_bits(n, m) <= ef_bits(n, m) + 2 * n


def test_split_sample():
    first, second, pivot = split(SAMPLE, 6)
    assert first.decode() == [3, 4, 7, 13, 14, 15] and first.m == 15
    assert second.decode() == [7, 11, 22, 24, 40, 48] and second.m == 48
    assert ef_bits(6, 15) == 22
    assert ef_bits(6, 48) == 30
    assert 22 + 30 <= ef_bits(12, 63)
    assert join(first, second, pivot) == SAMPLE


def test_split_k1():
    first, second, pivot = split(SAMPLE, 1)
    assert first.decode() == [3]
    assert join(first, second, pivot) == SAMPLE


def test_split_bad_rank():
    with pytest.raises(RangeError):
        split(SAMPLE, 12)


@given(sorted_sets(max_m=1 << 30, max_n=200), st.data())
def test_split_round_trip(data, d):
    v, _ = data
    assume(len(v) >= 2)
    k = d.draw(st.integers(1, len(v) - 1))
    first, second, pivot = split(v, k)
    assert join(first, second, pivot) == v


def test_sampled_sample():
    sp = SampledPredecessor.build(SAMPLE, SAMPLE_M, 4)
    assert list(sp.router.keys()) == [3, 14, 36]
    assert sp.predecessor(30) == 25
    assert sp.access(8) == 36


def test_sampled_single_block():
    sp = SampledPredecessor.build([5, 9, 11], 20, 4)
    assert list(sp.router.keys()) == [5]


def test_sampled_matches_plain():
    rng = random.Random(5)
    m = 1 << 32
    v = sorted(rng.sample(range(m), 20_000))
    ef = EliasFano.encode(v, m)
    sp = SampledPredecessor.build(v, m, 64)
    for _ in range(10_000):
        x = rng.randrange(m + 2)
        assert sp.predecessor(x) == ef.predecessor(x)


def test_space_report(t1):
    rep = t1.space_report()
    assert rep.ef_bits == 56
    assert rep.components["high"] + rep.components["low"] == 56
    assert rep.redundancy_bits == rep.measured_bits - 56


@given(sorted_sets(max_m=1 << 40, max_n=500))
def test_serialization_round_trip(data):
    v, m = data
    ef = EliasFano.encode(v, m)
    blob = ef.to_bytes()
    back, end = EliasFano.from_bytes(blob)
    assert end == len(blob)
    assert back.to_bytes() == blob
    assert back.decode() == v


def test_truncated_payload():
    blob = EliasFano.encode(SAMPLE, SAMPLE_M).to_bytes()
    with pytest.raises(FormatError):
        EliasFano.from_bytes(blob[:-3])


def test_decode_uses_numpy_int_input():
    v = np.array([2, 9, 40], dtype=np.int64)
    assert EliasFano.encode(v, 40).decode() == [2, 9, 40]
