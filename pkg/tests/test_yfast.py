import bisect
import random

import pytest
from hypothesis import given, strategies as st

from efset.yfast import YFastTrie


def test_single_key():
    t = YFastTrie(8)
    t.insert(5, "a")
    assert t.predecessor(6) == (5, "a")


@pytest.fixture
def heads():
    t = YFastTrie(6)
    for p, k in enumerate([3, 14, 36]):
        t.insert(k, p)
    return t


@pytest.mark.parametrize("x, want", [(30, 14), (14, 3), (3, None), (37, 36), (64, 36)])
def test_sample_heads(heads, x, want):
    got = heads.predecessor(x)
    assert (got[0] if got else None) == want


def test_duplicate_replaces_payload(heads):
    heads.insert(14, "z")
    assert heads.get(14) == "z" and len(heads) == 3


def test_delete_missing(heads):
    assert heads.delete(15) is None
    assert heads.delete(14) == 1
    assert 14 not in heads


def test_key_too_wide():
    with pytest.raises(ValueError):
        YFastTrie(4).insert(16)


@given(st.sets(st.integers(0, 255), max_size=120))
def test_exhaustive_small_universe(keys):
    t = YFastTrie(8)
    for k in keys:
        t.insert(k, k * 2)
    ks = sorted(keys)
    for x in range(257):
        j = bisect.bisect_left(ks, x)
        assert t.predecessor(x) == ((ks[j - 1], ks[j - 1] * 2) if j else None)
        assert t.successor(x) == ((ks[j], ks[j] * 2) if j < len(ks) else None)
    assert not t.audit()


def test_random_tape_against_sorted_list():
    rng = random.Random(2)
    w = 40
    t = YFastTrie(w)
    ref = []
    for step in range(100_000):
        r = rng.random()
        if r < 0.5 or not ref:
            k = rng.randrange(1 << w) if rng.random() < 0.9 else rng.randrange(5000)
            j = bisect.bisect_left(ref, k)
            if j == len(ref) or ref[j] != k:
                ref.insert(j, k)
            t.insert(k, k)
        elif r < 0.8:
            k = rng.choice(ref) if rng.random() < 0.8 else rng.randrange(1 << w)
            j = bisect.bisect_left(ref, k)
            present = j < len(ref) and ref[j] == k
            assert (t.delete(k) is not None) == present
            if present:
                ref.pop(j)
        else:
            x = rng.randrange(1 << w)
            j = bisect.bisect_left(ref, x)
            got = t.predecessor(x)
            assert (got[0] if got else None) == (ref[j - 1] if j else None)
        if step % 20_000 == 0:
            assert not t.audit()
    assert list(t.keys()) == ref
    assert not t.audit()


def test_probes_logarithmic():
    t = YFastTrie(64)
    rng = random.Random(0)
    for _ in range(5000):
        t.insert(rng.randrange(1 << 64))
    t.predecessor(rng.randrange(1 << 64))
    assert t.probes <= 7 + 1
