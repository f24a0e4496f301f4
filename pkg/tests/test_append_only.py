import bisect
import random

import pytest
from hypothesis import given, strategies as st

from efset.append_only import AppendOnlySet
from efset.ef_static import ef_bits
from efset.errors import EfsetError, FormatError, MonotonicityError, RangeError

from conftest import SAMPLE, SAMPLE_M


@pytest.fixture
def t1():
    return AppendOnlySet.from_values(SAMPLE, k=4, m=SAMPLE_M)


def test_sample_directory(t1):
    assert t1.bases == [3, 14, 36]
    assert t1.lows == [2, 2, 3]
    assert t1.buffer == []
    assert not t1.audit()


def test_raw_low_rule():
    s = AppendOnlySet.from_values(SAMPLE, k=4, m=SAMPLE_M, low_rule="raw")
    # ceil(log2(A[k-1] / k)) on the raw last values 13, 25, 62
    assert s.lows == [2, 3, 4]
    assert s.values() == SAMPLE


def test_sample_access(t1):
    assert t1.access(8) == 36
    assert [t1.access(i) for i in range(12)] == SAMPLE


@pytest.mark.parametrize("x, want", [(30, 25), (3, None), (0, None), (4, 3), (100, 62)])
def test_sample_predecessor(t1, x, want):
    assert t1.predecessor(x) == want


def test_first_append():
    s = AppendOnlySet(k=4)
    s.append(9)
    assert s.buffer == [9] and s.blocks == []


def test_equal_append_rejected(t1):
    with pytest.raises(MonotonicityError):
        t1.append(62)


def test_access_buffer_tail():
    s = AppendOnlySet.from_values([1, 5, 8, 20, 21, 30], k=4)
    assert s.access(5) == 30
    with pytest.raises(RangeError):
        s.access(6)


def test_freeze_seals_short_block():
    s = AppendOnlySet.from_values([1, 5, 8, 20, 21, 30], k=4)
    s.freeze()
    assert s.counts == [4, 2] and s.buffer == []
    assert s.values() == [1, 5, 8, 20, 21, 30]
    assert s.predecessor(25) == 21
    assert not s.audit()
    with pytest.raises(EfsetError):
        s.append(40)


def test_replay_random_tape():
    rng = random.Random(3)
    x = 0
    tape = []
    for _ in range(100_000):
        x += rng.randint(1, 1 << rng.randint(0, 20))
        tape.append(x)
    s = AppendOnlySet.from_values(tape)
    assert s.values() == tape
    for _ in range(5000):
        i = rng.randrange(len(tape))
        assert s.access(i) == tape[i]
    assert not s.audit()


@given(st.sets(st.integers(0, 3000), min_size=1, max_size=300), st.integers(1, 40))
def test_exhaustive_predecessor(values, k):
    vals = sorted(values)
    s = AppendOnlySet.from_values(vals, k=k, m=3000)
    for x in range(3002):
        j = bisect.bisect_left(vals, x)
        assert s.predecessor(x) == (vals[j - 1] if j else None)


def _gap_tape(gapbits, seed=4, count=50_000):
    rng = random.Random(seed)
    x = 0
    vals = []
    for _ in range(count):
        x += rng.randint(1, 1 << gapbits)
        vals.append(x)
    return vals


@pytest.mark.parametrize("gapbits", [3, 10, 25])
def test_payload_within_block_bounds(gapbits):
    s = AppendOnlySet.from_values(_gap_tape(gapbits), k=256)
    # each sealed block: k * low + a high bitmap of at most 2k bits
    assert s.payload_bits() <= sum(c * lo + 2 * c for c, lo in zip(s.counts, s.lows))


@pytest.mark.xfail(strict=True, reason="high bitmaps padded to n + 2^floor(log2 n) bits cost "
                                       "up to one extra bit per element over EF(n, m)")
def test_payload_within_ef_bits():
    vals = _gap_tape(3)
    s = AppendOnlySet.from_values(vals, k=256)
    assert s.payload_bits() <= ef_bits(len(vals), vals[-1])


@pytest.mark.parametrize("frozen", [False, True])
def test_serialization_round_trip(frozen):
    rng = random.Random(5)
    x = 0
    s = AppendOnlySet(k=64, m=(1 << 64) - 1)
    for _ in range(5000):
        x += rng.randint(1, 1 << 30)
        s.append(x)
    if frozen:
        s.freeze()
    blob = s.to_bytes()
    back, end = AppendOnlySet.from_bytes(blob)
    assert end == len(blob)
    assert back.to_bytes() == blob
    assert back.values() == s.values()
    assert back.frozen == frozen


def test_truncated():
    blob = AppendOnlySet.from_values(SAMPLE, k=4).to_bytes()
    with pytest.raises(FormatError):
        AppendOnlySet.from_bytes(blob[:30])
