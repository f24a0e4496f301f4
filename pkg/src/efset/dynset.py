"""Dynamic ordered set of integers in [0, m] close to EF(n, m) bits.

The elements are partitioned into a forest of :class:`SmallSetTree` blocks of
about ``CAP`` elements.  Tree ``i`` covers ``[base_i, base_{i+1})`` and stores
its elements relative to ``base_i``.  A counted B-tree over the forest answers
access by rank, and a y-fast trie over the bases routes value queries.

All size parameters come from a capacity class ``nhat`` (a power of two near
``n``).  When ``n`` leaves ``[nhat/4, 4*nhat]`` the whole forest is rebuilt
for the new class.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator

import numpy as np

from .counted import CountedTree
from .ef_static import SpaceReport
from .errors import FormatError, RangeError, UniverseError
from .small_set_tree import MIN_CLASS, ClassParams, SmallSetTree
from .yfast import YFastTrie

MAGIC = b"EFDS"
VERSION = 1
_HEADER = struct.Struct("<4sBQQQI")
MAX_UNIVERSE = (1 << 63) - 2


def _tree_size(t: SmallSetTree) -> int:
    return t.n


def _class_for(n: int) -> int:
    nhat = MIN_CLASS
    while nhat < n:
        nhat <<= 1
    return nhat


class DynSet:
    """Insert, delete, access by rank and strict predecessor over [0, m]."""

    def __init__(self, m: int, values: Iterable[int] = (), nhat: int | None = None):
        if not 0 <= m <= MAX_UNIVERSE:
            raise UniverseError(f"universe bound {m} outside [0, {MAX_UNIVERSE}]")
        self.m = m
        self.class_rebuilds: list[tuple[int, int, int]] = []
        self.mu_rebuilds = 0
        v = np.unique(np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                                 dtype=np.int64))
        if v.size and (v[0] < 0 or v[-1] > m):
            raise UniverseError(f"values must lie in [0, {m}]")
        self._build(v, nhat or _class_for(int(v.size)))

    @classmethod
    def from_sorted(cls, values, m: int) -> "DynSet":
        return cls(m, np.asarray(values, dtype=np.int64))

    # ------------------------------------------------------------------ build
    def _new_tree(self, base: int, universe: int, local) -> SmallSetTree:
        t = SmallSetTree(self.params, universe, local)
        t.base = base
        return t

    def _build(self, values: np.ndarray, nhat: int) -> None:
        self.nhat = max(MIN_CLASS, nhat)
        self.params = ClassParams.for_class(self.nhat)
        self.cap = self.params.capacity
        self.n = int(values.size)
        self.upper = CountedTree(self.params.fanout, _tree_size,
                                 field_bits=max(16, (8 * max(self.n, self.nhat)).bit_length()))
        self.router = YFastTrie(max(1, self.m.bit_length()))
        if self.n == 0:
            self.upper.build([])
            return
        nt = -(-self.n // self.cap)
        bounds = ((np.arange(nt + 1, dtype=np.int64) * self.n) // nt).tolist()
        bases = [int(values[s]) for s in bounds[:-1]]
        trees = []
        for i in range(nt):
            base = bases[i]
            limit = bases[i + 1] - 1 if i + 1 < nt else self.m
            trees.append(self._new_tree(base, limit - base, values[bounds[i]:bounds[i + 1]] - base))
        self.upper.build(trees)
        for t in trees:
            self.router.insert(t.base, t)

    def _limit(self, t: SmallSetTree) -> int:
        """Largest absolute value tree t may hold."""
        return t.next.base - 1 if t.next is not None else self.m

    def _maybe_reclass(self) -> None:
        n = self.n
        if n > 4 * self.nhat or (self.nhat > MIN_CLASS and 4 * n < self.nhat):
            old = self.nhat
            vals = np.asarray(self.values(), dtype=np.int64)
            self._build(vals, old * 2 if n > 4 * old else old // 2)
            self.class_rebuilds.append((n, old, self.nhat))

    def rebuild_class(self) -> None:
        """Re-derive every size parameter for the current n."""
        nhat = _class_for(self.n)
        if self.n and nhat != self.nhat:
            old = self.nhat
            self._build(np.asarray(self.values(), dtype=np.int64), nhat)
            self.class_rebuilds.append((self.n, old, self.nhat))

    # ---------------------------------------------------------------- routing
    def _tree_le(self, x: int) -> SmallSetTree | None:
        """Tree with the largest base <= x."""
        hit = self.router.predecessor(x + 1)
        return hit[1] if hit is not None else None

    def _replace(self, old: SmallSetTree, new: list[SmallSetTree]) -> None:
        self.router.delete(old.base)
        prev = old.prev
        self.upper.remove(old)
        for t in new:
            self.upper.insert_after(prev, t)
            self.router.insert(t.base, t)
            prev = t

    def _split(self, t: SmallSetTree) -> None:
        vals = np.asarray(t.values(), dtype=np.int64)
        h = len(vals) >> 1
        pivot = int(vals[h])
        limit = self._limit(t)
        left = self._new_tree(t.base, pivot - 1, vals[:h])
        right = self._new_tree(t.base + pivot, limit - t.base - pivot, vals[h:] - pivot)
        self._replace(t, [left, right])

    def _merge(self, t: SmallSetTree) -> None:
        p, q = t.prev, t.next
        if p is None and q is None:
            return
        if q is None or (p is not None and p.n <= q.n):
            a, c = p, t
        else:
            a, c = t, q
        limit = self._limit(c)
        delta = c.base - a.base
        vals = np.concatenate([np.asarray(a.values(), dtype=np.int64),
                               np.asarray(c.values(), dtype=np.int64) + delta])
        self.router.delete(c.base)
        self.upper.remove(c)
        merged = self._new_tree(a.base, limit - a.base, vals)
        self._replace(a, [merged])
        if merged.n > 2 * self.cap:
            self._split(merged)

    # ---------------------------------------------------------------- updates
    def insert(self, x: int) -> bool:
        """Add x; returns whether the set changed."""
        if not 0 <= x <= self.m:
            raise UniverseError(f"{x} outside [0, {self.m}]")
        if self.n == 0:
            self._build(np.asarray([x], dtype=np.int64), self.nhat)
            return True
        t = self._tree_le(x)
        if t is None:
            # new global minimum: lower the first tree's base
            t = self.upper.first
            delta = t.base - x
            self.router.delete(t.base)
            t.shift(delta)
            t.base = x
            t.set_universe(t.universe + delta)
            self.router.insert(x, t)
        r = t.rebuilds
        if not t.insert(x - t.base):
            return False
        self.mu_rebuilds += t.rebuilds - r
        self.n += 1
        self.upper.adjust(t, 1)
        if t.n > 2 * self.cap:
            self._split(t)
        self._maybe_reclass()
        return True

    def delete(self, x: int) -> bool:
        """Remove x; returns whether the set changed."""
        if self.n == 0 or not 0 <= x <= self.m:
            return False
        t = self._tree_le(x)
        if t is None:
            return False
        r = t.rebuilds
        if not t.delete(x - t.base):
            return False
        self.mu_rebuilds += t.rebuilds - r
        self.n -= 1
        self.upper.adjust(t, -1)
        if t.n == 0:
            p = t.prev
            self.router.delete(t.base)
            self.upper.remove(t)
            if p is not None:
                p.set_universe(self._limit(p) - p.base)
        elif t.n < self.cap // 2 and (t.prev is not None or t.next is not None):
            self._merge(t)
        self._maybe_reclass()
        return True

    @property
    def rebuild_events(self) -> int:
        """Low-width rebuilds inside trees plus class rebuilds, since construction."""
        return self.mu_rebuilds + len(self.class_rebuilds)

    # ---------------------------------------------------------------- queries
    def __len__(self) -> int:
        return self.n

    def access(self, i: int) -> int:
        """The i-th smallest element (0-based)."""
        if not 0 <= i < self.n:
            raise RangeError(f"access({i}) on set of size {self.n}")
        t, r = self.upper.locate(i)
        return t.base + t.access(r)

    def predecessor(self, x: int) -> int | None:
        """Largest element strictly below x, or None."""
        if self.n == 0 or x <= 0:
            return None
        t = self._tree_le(x - 1)
        if t is None:
            return None
        r = t.predecessor(x - t.base)
        if r is not None:
            return t.base + r
        p = t.prev
        return p.base + p.max() if p is not None else None

    def successor(self, x: int) -> int | None:
        """Smallest element >= x, or None."""
        if self.n == 0:
            return None
        t = self._tree_le(x) if x >= 0 else None
        if t is None:
            return self.min()
        r = t.successor(x - t.base)
        if r is not None:
            return t.base + r
        q = t.next
        return q.base + q.min() if q is not None else None

    def rank(self, x: int) -> int:
        """Number of elements strictly below x."""
        if self.n == 0 or x <= 0:
            return 0
        t = self._tree_le(x - 1)
        if t is None:
            return 0
        return self.upper.rank_of(t) + t.rank(x - t.base)

    def __contains__(self, x: int) -> bool:
        if self.n == 0 or not 0 <= x <= self.m:
            return False
        t = self._tree_le(x)
        return t is not None and (x - t.base) in t

    def min(self) -> int | None:
        t = self.upper.first
        return t.base + t.min() if t is not None else None

    def max(self) -> int | None:
        t = self.upper.last
        return t.base + t.max() if t is not None else None

    def __iter__(self) -> Iterator[int]:
        for t in self.upper:
            b = t.base
            for v in t:
                yield b + v

    def values(self) -> list[int]:
        out: list[int] = []
        for t in self.upper:
            b = t.base
            out.extend(b + v for v in t.values())
        return out

    def trees(self) -> list[SmallSetTree]:
        return list(self.upper)

    # ------------------------------------------------------------------ audit
    def audit(self, deep: bool = True) -> list[str]:
        errs = [f"upper tree: {e}" for e in self.upper.audit()]
        trees = list(self.upper)
        bases = [t.base for t in trees]
        if any(b2 <= b1 for b1, b2 in zip(bases, bases[1:])):
            errs.append("bases not strictly increasing")
        if list(self.router.items()) != [(t.base, t) for t in trees]:
            if sorted(self.router.keys()) != bases:
                errs.append("router keys differ from the bases")
            else:
                errs.append("router payloads do not point at their trees")
        errs.extend(f"router: {e}" for e in self.router.audit())
        total = 0
        for t in trees:
            total += t.n
            if t.n == 0:
                errs.append(f"empty tree at base {t.base}")
                continue
            if t.universe != self._limit(t) - t.base:
                errs.append(f"tree at base {t.base} has universe {t.universe}, "
                            f"expected {self._limit(t) - t.base}")
            if t.base + t.max() > self._limit(t) or t.min() < 0:
                errs.append(f"tree at base {t.base} holds values outside its range")
            if len(trees) > 1 and not self.cap // 2 <= t.n <= 2 * self.cap:
                errs.append(f"tree size {t.n} outside [{self.cap // 2}, {2 * self.cap}]")
            if deep:
                errs.extend(f"tree at base {t.base}: {e}" for e in t.audit())
        if total != self.n:
            errs.append(f"tree sizes sum to {total}, n = {self.n}")
        return errs

    # ------------------------------------------------------------------ space
    def space_report(self) -> SpaceReport:
        comp: dict[str, int] = {}
        trees = list(self.upper)
        for t in trees:
            for k, v in t.space_bits().items():
                comp[k] = comp.get(k, 0) + v
        nt = len(trees)
        comp["bases"] = nt * max(1, self.m.bit_length())
        comp["router"] = self.router.size_bits(payload_bits=max(1, nt).bit_length())
        comp["upper_tree"] = self.upper.size_bits()
        comp["header"] = 4 * 64
        return SpaceReport.from_components(self.n, self.m, comp)

    def payload_bits(self) -> int:
        """Elias-Fano payload (high and low parts) summed over the forest."""
        return sum(t.space_bits()["ef_high"] + t.n * t.mu for t in self.upper)

    # ---------------------------------------------------------- serialization
    def to_bytes(self) -> bytes:
        trees = list(self.upper)
        out = [_HEADER.pack(MAGIC, VERSION, self.n, self.m, self.nhat, len(trees))]
        for t in trees:
            out.append(struct.pack("<Q", t.base))
            out.append(t.to_bytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["DynSet", int]:
        if len(data) - offset < _HEADER.size:
            raise FormatError("truncated header")
        magic, version, n, m, nhat, nt = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        pos = offset + _HEADER.size
        s = cls.__new__(cls)
        s.m = m
        s.class_rebuilds = []
        s._build(np.zeros(0, dtype=np.int64), nhat)
        trees = []
        for _ in range(nt):
            if len(data) - pos < 8:
                raise FormatError("truncated tree record")
            (base,) = struct.unpack_from("<Q", data, pos)
            t, pos = SmallSetTree.from_bytes(data, pos + 8, s.params)
            t.base = base
            trees.append(t)
        if sum(t.n for t in trees) != n:
            raise FormatError("tree sizes do not add up to n")
        s.n = n
        s.upper.build(trees)
        for t in trees:
            s.router.insert(t.base, t)
        return s, pos
