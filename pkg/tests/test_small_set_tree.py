import bisect
import math
import random

import pytest
from hypothesis import given, strategies as st

from efset.ef_static import ef_bits, low_width
from efset.errors import RangeError, UniverseError
from efset.small_set_tree import ClassParams, SmallSetTree

from conftest import SAMPLE, SAMPLE_M

TINY = ClassParams(nhat=16, cap_mini=4, capacity=64, tau=4, period=10_000, fanout=4)
BIG = ClassParams.for_class(1 << 24)


def test_class_params():
    p16 = ClassParams.for_class(1 << 16)
    assert (p16.cap_mini, p16.capacity, p16.tau, p16.period) == (16, 4096, 7, 1024)
    assert (BIG.cap_mini, BIG.capacity, BIG.tau, BIG.period) == (22, 12109, 9, 2641)
    assert ClassParams.for_class(4) == ClassParams.for_class(16)


@pytest.fixture
def t1():
    return SmallSetTree(TINY, SAMPLE_M, SAMPLE)


def test_sample_queries(t1):
    assert t1.access(8) == 36
    assert t1.access(0) == 3
    assert t1.predecessor(30) == 25
    assert t1.predecessor(3) is None
    assert not t1.audit()


def test_access_out_of_range(t1):
    with pytest.raises(RangeError):
        t1.access(12)


def test_insert_outside_universe(t1):
    with pytest.raises(UniverseError):
        t1.insert(64)


def test_insert_shuffled_sample():
    t = SmallSetTree(TINY, SAMPLE_M)
    vals = list(SAMPLE)
    random.Random(8).shuffle(vals)
    for x in vals:
        assert t.insert(x)
    assert not t.insert(vals[0])
    assert t.values() == SAMPLE
    assert not t.audit()


def test_delete_absent(t1):
    assert not t1.delete(5)
    assert len(t1) == 12


def test_insert_delete_inverse():
    rng = random.Random(1)
    vals = sorted(rng.sample(range(1 << 20), 300))
    p = ClassParams.for_class(1 << 16)
    t = SmallSetTree(p, (1 << 20) - 1, vals)
    before = t.to_bytes()
    for _ in range(50):
        x = rng.randrange(1 << 20)
        if x in vals:
            continue
        t.insert(x)
        t.delete(x)
        assert t.to_bytes() == before


@given(st.sets(st.integers(0, 4095), max_size=200), st.data())
def test_exhaustive_predecessor(values, data):
    vals = sorted(values)
    t = SmallSetTree(TINY, 4095)
    order = data.draw(st.permutations(vals))
    for x in order:
        t.insert(x)
    assert t.values() == vals
    for x in range(4097):
        j = bisect.bisect_left(vals, x)
        assert t.predecessor(x) == (vals[j - 1] if j else None)
    assert not t.audit()


def test_differential_big_class():
    """10^5 seeded ops at the 2^24 parameterization, n' around 12,000."""
    rng = random.Random(24)
    universe = (1 << 40) - 1
    init = sorted(rng.sample(range(universe), 11_000))
    t = SmallSetTree(BIG, universe, init)
    ref = list(init)
    drift = 0
    updates = 0
    for step in range(100_000):
        r = rng.random()
        if r < 0.3:
            x = rng.randrange(universe)
            j = bisect.bisect_left(ref, x)
            fresh = j == len(ref) or ref[j] != x
            assert t.insert(x) == fresh
            if fresh:
                ref.insert(j, x)
                updates += 1
        elif r < 0.6:
            x = rng.choice(ref)
            assert t.delete(x)
            ref.remove(x)
            updates += 1
        elif r < 0.8:
            i = rng.randrange(len(ref))
            assert t.access(i) == ref[i]
        else:
            x = rng.randrange(universe)
            j = bisect.bisect_left(ref, x)
            assert t.predecessor(x) == (ref[j - 1] if j else None)
        drift = max(drift, abs(t.mu - t.fresh_mu()))
        if step % 5000 == 0:
            assert not t.audit()
            assert t.height() <= math.ceil(2 / (2 / 3))
    assert t.values() == ref
    assert not t.audit()
    assert drift <= 1
    assert t.rebuilds == updates // BIG.period


def test_rebuild_postconditions():
    rng = random.Random(3)
    universe = 1 << 30
    t = SmallSetTree(BIG, universe, sorted(rng.sample(range(universe), 500)))
    for _ in range(BIG.period - 1):
        t.insert(rng.randrange(universe))
    assert t.updates == BIG.period - 1
    before = t.values()
    t.insert(rng.randrange(universe))
    assert t.updates == 0 and t.rebuilds == 1
    assert t.mu == low_width(len(t), universe)
    after = t.values()
    assert set(before) <= set(after) and len(after) - len(before) in (0, 1)
    vals = t.values()
    t.rebuild_low_width()
    assert t.values() == vals


def test_payload_after_rebuild_within_ef_bits():
    rng = random.Random(9)
    for universe in (1 << 20, 10 ** 9, (1 << 44) + 12345):
        n = rng.randint(2000, 12000)
        t = SmallSetTree(BIG, universe, sorted(rng.sample(range(universe + 1), n)))
        sb = t.space_bits()
        assert sb["ef_high"] + sb["ef_low"] <= ef_bits(n, universe)


def test_shift():
    t = SmallSetTree(TINY, 200, [0, 5, 9, 40, 41, 90, 100])
    t.set_universe(210)
    t.shift(10)
    assert t.values() == [10, 15, 19, 50, 51, 100, 110]
    assert not t.audit()


def test_empty_tree():
    t = SmallSetTree(TINY, 100)
    assert t.predecessor(50) is None and t.min() is None
    assert t.insert(7) and t.values() == [7]
    assert t.delete(7) and len(t) == 0


def test_serialization_round_trip():
    rng = random.Random(4)
    universe = 1 << 36
    t = SmallSetTree(BIG, universe, sorted(rng.sample(range(universe), 4000)))
    for _ in range(3000):
        t.insert(rng.randrange(universe))
    blob = t.to_bytes()
    back, end = SmallSetTree.from_bytes(blob, 0, BIG)
    assert end == len(blob)
    assert back.to_bytes() == blob
    assert back.values() == t.values()
