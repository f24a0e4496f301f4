"""Bounded-capacity dynamic ordered set stored as Elias-Fano mini-blocks.

Values are local to the tree (``0 <= x <= universe``).  They are cut into
mini-blocks of about ``cap_mini`` elements.  Each mini-block is Elias-Fano
encoded relative to the previous block's last value, with one low-bit width
``mu`` shared by the whole tree:

* the negated-unary high part lives in a :class:`BlockStore` slot,
* the low parts live in one of a handful of :class:`TieredArray` instances,
  found through ``(array_id, offset)``,
* a counted B-tree of fanout ``tau`` indexes the blocks by element count, and
  routes values by each block's cached last value.

``mu`` is only recomputed every ``period`` updates; in between it may lag the
fresh ``ceil(log2(universe / n))`` value.
"""

from __future__ import annotations

import math
import struct
from array import array
from bisect import bisect_left
from dataclasses import dataclass
from operator import attrgetter
from typing import Iterator

import numpy as np

from .bitvec import select_in_int
from .counted import CountedTree
from .ef_static import low_width, pack_fields, unpack_fields
from .errors import CapacityError, FormatError, RangeError, UniverseError
from .storage import BlockStore, TieredArray

MIN_CLASS = 16


def _ceil(x: float) -> int:
    return math.ceil(x - 1e-9)


@dataclass(frozen=True)
class ClassParams:
    """Size parameters derived from a capacity class ``nhat`` (power of two)."""

    nhat: int
    cap_mini: int
    capacity: int
    tau: int
    period: int
    fanout: int

    @classmethod
    def for_class(cls, nhat: int) -> "ClassParams":
        nhat = max(MIN_CLASS, nhat)
        lg = math.log2(nhat)
        llg = math.log2(lg)
        return cls(
            nhat=nhat,
            cap_mini=max(8, _ceil(llg * llg)),
            capacity=_ceil((lg * llg) ** 2),
            tau=max(4, _ceil(lg ** (2 / 3))),
            period=_ceil(lg * lg * llg),
            fanout=max(4, _ceil(lg)),
        )

    @classmethod
    def for_size(cls, n: int) -> "ClassParams":
        nhat = MIN_CLASS
        while nhat < n:
            nhat <<= 1
        return cls.for_class(nhat)


class MiniBlock:
    __slots__ = ("slot", "array_id", "offset", "count", "last", "prev", "next", "parent")

    def __init__(self, slot=-1, array_id=0, offset=0, count=0, last=0):
        self.slot = slot
        self.array_id = array_id
        self.offset = offset
        self.count = count
        self.last = last
        self.prev = self.next = self.parent = None

    def __repr__(self) -> str:
        return f"MiniBlock(count={self.count}, last={self.last})"


_count = attrgetter("count")
_last = attrgetter("last")
_TREE_HEADER = struct.Struct("<QQBI")


def _high_bits(ds: list[int], mu: int) -> tuple[int, int]:
    h = 0
    for i, d in enumerate(ds):
        h |= 1 << ((d >> mu) + i)
    return h, len(ds) + (ds[-1] >> mu)


class SmallSetTree:
    def __init__(self, params: ClassParams, universe: int, values=(), mu: int | None = None,
                 eps: float = 0.5):
        self.params = params
        self.universe = universe
        self.base = 0  # absolute offset, owned by the enclosing set
        self.prev = self.next = self.parent = None
        self.eps = eps
        self.seg_cap = max(1, math.ceil(max(1, params.capacity // params.cap_mini) ** eps))
        self.updates = 0
        self.rebuilds = 0
        self.n = 0
        self.mu = 0
        self.tree = CountedTree(params.tau, _count, field_bits=(8 * params.capacity + 8).bit_length())
        v = np.asarray(values, dtype=np.int64)
        if v.size and (int(v[0]) < 0 or int(v[-1]) > universe):
            raise UniverseError(f"values must lie in [0, {universe}]")
        self._load(v, mu=mu)

    # ----------------------------------------------------------- bulk encoding
    def _max_block_bits(self) -> int:
        return 2 * self.params.cap_mini + 66 + (self.universe >> self.mu)

    def _bounds(self, n: int) -> np.ndarray:
        nb = max(1, -(-n // self.params.cap_mini))
        return (np.arange(nb + 1, dtype=np.int64) * n) // nb

    def _load(self, values: np.ndarray, bounds: np.ndarray | None = None,
              mu: int | None = None, blocks: list[MiniBlock] | None = None) -> None:
        n = int(values.size)
        self.n = n
        self.mu = low_width(n, self.universe) if mu is None else mu
        mu = self.mu
        if n == 0:
            self.store = BlockStore(self._max_block_bits())
            self.arrays = [TieredArray(mu, cap=self.seg_cap)]
            self.members = [[]]
            self.tree.build([])
            return
        if bounds is None:
            bounds = self._bounds(n)
        nb = len(bounds) - 1
        starts = bounds[:-1]
        ends = bounds[1:]
        sizes = ends - starts
        lasts = values[ends - 1]
        los = np.zeros(nb, dtype=np.int64)
        los[1:] = lasts[:-1] + 1
        bid = np.repeat(np.arange(nb), sizes)
        d = values - los[bid]
        pos = (d >> mu) + (np.arange(n, dtype=np.int64) - starts[bid])
        hbits = sizes + (d[ends - 1] >> mu)
        small = pos < 64
        bitvals = np.zeros(n, dtype=np.uint64)
        bitvals[small] = np.left_shift(np.uint64(1), pos[small].astype(np.uint64))
        hv = np.bitwise_or.reduceat(bitvals, starts).tolist()
        hb = hbits.tolist()
        for i in np.flatnonzero(hbits > 64).tolist():
            h = 0
            for p in pos[starts[i]:ends[i]].tolist():
                h |= 1 << p
            hv[i] = h
        self.store = BlockStore.from_blocks(list(zip(hv, hb)), self._max_block_bits())
        lows = d & ((1 << mu) - 1)
        na = min(nb, self.params.cap_mini)
        gb = (np.arange(na + 1) * nb) // na
        self.arrays = []
        self.members = []
        arr_of = (np.searchsorted(gb, np.arange(nb), side="right") - 1).tolist()
        for a in range(na):
            e0, e1 = int(bounds[gb[a]]), int(bounds[gb[a + 1]])
            self.arrays.append(TieredArray.from_values(lows[e0:e1], mu, cap=self.seg_cap))
            self.members.append([])
        base_of = [int(bounds[gb[a]]) for a in range(na)]
        st = starts.tolist()
        sz = sizes.tolist()
        ls = lasts.tolist()
        fresh = blocks is None
        if fresh:
            blocks = [MiniBlock() for _ in range(nb)]
        for i, b in enumerate(blocks):
            a = arr_of[i]
            b.slot = i
            b.array_id = a
            b.offset = st[i] - base_of[a]
            b.count = sz[i]
            b.last = ls[i]
            self.members[a].append(b)
        if fresh:
            self.tree.build(blocks)

    # -------------------------------------------------------------- block ops
    def _lo(self, b: MiniBlock) -> int:
        return b.prev.last + 1 if b.prev is not None else 0

    def _decode(self, b: MiniBlock, lo: int | None = None) -> list[int]:
        if lo is None:
            lo = b.prev.last + 1 if b.prev is not None else 0
        h = self.store.read(b.slot)
        lows = self.arrays[b.array_id].get_many(b.offset, b.count)
        mu = self.mu
        out = []
        i = 0
        while h:
            t = h & -h
            out.append(lo + ((((t.bit_length() - 1) - i) << mu) | lows[i]))
            h ^= t
            i += 1
        return out

    def _write_high(self, b: MiniBlock, vals: list[int], lo: int) -> None:
        h, bits = _high_bits([v - lo for v in vals], self.mu)
        try:
            self.store.realloc(b.slot, bits)
        except CapacityError:
            self.store.max_block_bits = max(self.store.max_block_bits, 2 * bits)
            self.store.realloc(b.slot, bits)
        self.store.write(b.slot, h)

    def _shift_offsets(self, b: MiniBlock, delta: int) -> None:
        ms = self.members[b.array_id]
        i = ms.index(b)
        for k in range(i + 1, len(ms)):
            ms[k].offset += delta

    def _reencode(self, b: MiniBlock, old_lo: int) -> None:
        """Block b's predecessor boundary moved; rewrite it relative to the new one."""
        vals = self._decode(b, old_lo)
        lo = self._lo(b)
        mask = (1 << self.mu) - 1
        self.arrays[b.array_id].set_many(b.offset, [(v - lo) & mask for v in vals])
        self._write_high(b, vals, lo)

    def _split_block(self, b: MiniBlock, vals: list[int], lo: int) -> None:
        h = len(vals) >> 1
        left, right = vals[:h], vals[h:]
        c = MiniBlock(array_id=b.array_id, offset=b.offset + h, count=len(right), last=b.last)
        b.count = h
        b.last = left[-1]
        ms = self.members[b.array_id]
        ms.insert(ms.index(b) + 1, c)
        new_lo = left[-1] + 1
        mask = (1 << self.mu) - 1
        self.arrays[c.array_id].set_many(c.offset, [(v - new_lo) & mask for v in right])
        self._write_high(b, left, lo)
        hv, bits = _high_bits([v - new_lo for v in right], self.mu)
        c.slot = self.store.alloc(min(bits, self.store.max_block_bits))
        if bits > self.store.max_block_bits:
            self.store.max_block_bits = 2 * bits
            self.store.realloc(c.slot, bits)
        self.store.write(c.slot, hv)
        self.tree.adjust(b, -len(right))
        self.tree.insert_after(b, c)

    def _drop_block(self, b: MiniBlock) -> None:
        nxt = b.next
        old_lo = b.last + 1
        self.store.free(b.slot)
        self.members[b.array_id].remove(b)
        self.tree.remove(b)
        if nxt is not None:
            self._reencode(nxt, old_lo)

    def _merge_block(self, b: MiniBlock) -> None:
        p, q = b.prev, b.next
        if p is None and q is None:
            return
        if q is None or (p is not None and p.count <= q.count):
            a, c = p, b
        else:
            a, c = b, q
        lo = self._lo(a)
        vals = self._decode(a, lo) + self._decode(c)
        mask = (1 << self.mu) - 1
        tail = [(v - lo) & mask for v in vals[a.count:]]
        ams = self.members[a.array_id]
        ia = ams.index(a)
        if c.array_id == a.array_id and ia + 1 < len(ams) and ams[ia + 1] is c:
            self.arrays[a.array_id].set_many(c.offset, tail)
            ams.pop(ia + 1)
        else:
            carr = self.arrays[c.array_id]
            for _ in range(c.count):
                carr.delete(c.offset)
            self._shift_offsets(c, -c.count)
            self.members[c.array_id].remove(c)
            aarr = self.arrays[a.array_id]
            at = a.offset + a.count
            for k, x in enumerate(tail):
                aarr.insert(at + k, x)
            self._shift_offsets(a, len(tail))
        moved = c.count
        self.store.free(c.slot)
        self.tree.remove(c)
        a.count += moved
        a.last = vals[-1]
        self.tree.adjust(a, moved)
        self._write_high(a, vals, lo)
        if a.count > 2 * self.params.cap_mini:
            self._split_block(a, vals, lo)

    def _tick(self) -> None:
        self.updates += 1
        if self.updates >= self.params.period:
            self.rebuild_low_width()

    # ---------------------------------------------------------------- updates
    def insert(self, x: int) -> bool:
        """Add x; returns False if it was already present."""
        if not 0 <= x <= self.universe:
            raise UniverseError(f"{x} outside local universe [0, {self.universe}]")
        if self.n == 0:
            self._load(np.asarray([x], dtype=np.int64))
            self._tick()
            return True
        b = self.tree.find_first(x, _last) or self.tree.last
        lo = self._lo(b)
        vals = self._decode(b, lo)
        pos = bisect_left(vals, x)
        if pos < len(vals) and vals[pos] == x:
            return False
        self.arrays[b.array_id].insert(b.offset + pos, (x - lo) & ((1 << self.mu) - 1))
        self._shift_offsets(b, 1)
        vals.insert(pos, x)
        b.count += 1
        if x > b.last:
            b.last = x
        self._write_high(b, vals, lo)
        self.tree.adjust(b, 1)
        self.n += 1
        if b.count > 2 * self.params.cap_mini:
            self._split_block(b, vals, lo)
        self._tick()
        return True

    def delete(self, x: int) -> bool:
        """Remove x; returns False if it was absent."""
        if self.n == 0 or x < 0:
            return False
        b = self.tree.find_first(x, _last)
        if b is None:
            return False
        lo = self._lo(b)
        vals = self._decode(b, lo)
        pos = bisect_left(vals, x)
        if pos == len(vals) or vals[pos] != x:
            return False
        self.arrays[b.array_id].delete(b.offset + pos)
        self._shift_offsets(b, -1)
        vals.pop(pos)
        b.count -= 1
        self.tree.adjust(b, -1)
        self.n -= 1
        if b.count == 0:
            self._drop_block(b)
        else:
            nxt = b.next
            if x == b.last:
                b.last = vals[-1]
                self._write_high(b, vals, lo)
                if nxt is not None:
                    self._reencode(nxt, x + 1)
            else:
                self._write_high(b, vals, lo)
            if b.count < self.params.cap_mini // 2:
                self._merge_block(b)
        self._tick()
        return True

    def shift(self, delta: int) -> None:
        """Add delta to every stored value (the enclosing base moved)."""
        first = self.tree.first
        if first is None:
            return
        vals = [v + delta for v in self._decode(first, 0)]
        if vals[0] < 0:
            raise UniverseError("shift would make values negative")
        for b in self.tree:
            b.last += delta
        mask = (1 << self.mu) - 1
        self.arrays[first.array_id].set_many(first.offset, [v & mask for v in vals])
        self._write_high(first, vals, 0)

    def set_universe(self, universe: int) -> None:
        self.universe = universe
        self.store.max_block_bits = max(self.store.max_block_bits, self._max_block_bits())

    def fresh_mu(self) -> int:
        return low_width(self.n, self.universe)

    def rebuild_low_width(self) -> None:
        """Re-encode every block with mu = ceil(log2(universe / n)).

        Block boundaries (and so every counter) stay as they are.
        """
        blocks = list(self.tree)
        vals = np.asarray(self.values(), dtype=np.int64)
        if blocks:
            bounds = np.zeros(len(blocks) + 1, dtype=np.int64)
            np.cumsum([b.count for b in blocks], out=bounds[1:])
            self.mu = low_width(self.n, self.universe)
            self._load(vals, bounds, mu=self.mu, blocks=blocks)
        else:
            self._load(vals)
        self.updates = 0
        self.rebuilds += 1

    # ---------------------------------------------------------------- queries
    def __len__(self) -> int:
        return self.n

    def access(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise RangeError(f"access({i}) on tree of size {self.n}")
        b, r = self.tree.locate(i)
        p = select_in_int(self.store.read(b.slot), r)
        lo = b.prev.last + 1 if b.prev is not None else 0
        return lo + (((p - r) << self.mu) | self.arrays[b.array_id].get(b.offset + r))

    def predecessor(self, x: int) -> int | None:
        """Largest stored value strictly below x."""
        if self.n == 0 or x <= 0:
            return None
        b = self.tree.find_first(x, _last)
        if b is None:
            return self.tree.last.last
        vals = self._decode(b)
        i = bisect_left(vals, x)
        if i:
            return vals[i - 1]
        return b.prev.last if b.prev is not None else None

    def successor(self, x: int) -> int | None:
        """Smallest stored value >= x."""
        if self.n == 0:
            return None
        b = self.tree.find_first(x, _last)
        if b is None:
            return None
        vals = self._decode(b)
        return vals[bisect_left(vals, x)]

    def rank(self, x: int) -> int:
        """Number of stored values strictly below x."""
        if self.n == 0:
            return 0
        b = self.tree.find_first(x, _last)
        if b is None:
            return self.n
        return self.tree.rank_of(b) + bisect_left(self._decode(b), x)

    def __contains__(self, x: int) -> bool:
        return self.successor(x) == x

    def min(self) -> int | None:
        return self._decode(self.tree.first, 0)[0] if self.n else None

    def max(self) -> int | None:
        return self.tree.last.last if self.n else None

    def __iter__(self) -> Iterator[int]:
        for b in self.tree:
            yield from self._decode(b)

    def values(self) -> list[int]:
        out: list[int] = []
        for b in self.tree:
            out.extend(self._decode(b))
        return out

    def blocks(self) -> list[MiniBlock]:
        return list(self.tree)

    def height(self) -> int:
        return self.tree.height()

    # ------------------------------------------------------------------ audit
    def audit(self) -> list[str]:
        errs = [f"tau-tree: {e}" for e in self.tree.audit()]
        cap = self.params.cap_mini
        blocks = list(self.tree)
        total = 0
        prev_last = -1
        for b in blocks:
            vals = self._decode(b)
            if len(vals) != b.count:
                errs.append(f"block decodes {len(vals)} values, count says {b.count}")
            if vals and (vals[0] <= prev_last or any(y <= x for x, y in zip(vals, vals[1:]))):
                errs.append("values not strictly increasing across blocks")
            if vals and vals[-1] != b.last:
                errs.append(f"cached last {b.last} != decoded {vals[-1]}")
            if vals and vals[-1] > self.universe:
                errs.append(f"value {vals[-1]} above universe {self.universe}")
            if len(blocks) > 1 and not cap // 2 <= b.count <= 2 * cap:
                errs.append(f"block size {b.count} outside [{cap // 2}, {2 * cap}]")
            if vals:
                lo = self._lo(b)
                _, bits = _high_bits([v - lo for v in vals], self.mu)
                if self.store.nbits[b.slot] != bits:
                    errs.append("stored high-part length is not canonical")
            prev_last = b.last
            total += b.count
        if total != self.n:
            errs.append(f"block counts sum to {total}, n = {self.n}")
        for a, ms in enumerate(self.members):
            off = 0
            for b in ms:
                if b.array_id != a or b.offset != off:
                    errs.append(f"low-part offsets inconsistent in array {a}")
                    break
                off += b.count
            if off != len(self.arrays[a]):
                errs.append(f"array {a} holds {len(self.arrays[a])} lows, blocks claim {off}")
        if self.updates >= self.params.period:
            errs.append("update counter reached the rebuild period without a rebuild")
        return errs

    # ------------------------------------------------------------------ space
    def space_bits(self) -> dict:
        st = self.store.size_bits()
        nblocks = len(self.store.offsets) - len(self.store.free_ids)
        arr = {"payload": 0, "slack": 0, "directory": 0}
        longest = 1
        for ta in self.arrays:
            for k, v in ta.size_bits().items():
                arr[k] += v
            longest = max(longest, len(ta))
        per_block = (
            max(1, self.universe).bit_length()          # cached last value
            + max(1, len(self.arrays) - 1).bit_length()  # array id
            + longest.bit_length()                       # offset in array
            + max(1, len(self.store.offsets) - 1).bit_length()  # slot id
            + (2 * self.params.cap_mini + 1).bit_length()       # count
        )
        return {
            "ef_high": st["payload"],
            "ef_low": arr["payload"],
            "block_store_slack": st["slack"],
            "block_store_bookkeeping": st["bookkeeping"],
            "low_array_slack": arr["slack"],
            "low_array_directory": arr["directory"] + 64 * len(self.arrays),
            "block_metadata": nblocks * per_block,
            "tau_tree": self.tree.size_bits(),
            "tree_header": 8 + 3 * 64,
        }

    # ---------------------------------------------------------- serialization
    def to_bytes(self) -> bytes:
        blocks = list(self.tree)
        out = [_TREE_HEADER.pack(self.universe, self.n, self.mu, len(blocks))]
        counts = array("I", [b.count for b in blocks])
        hbits = array("I", [self.store.nbits[b.slot] for b in blocks])
        out.append(counts.tobytes())
        out.append(hbits.tobytes())
        for b in blocks:
            nw = (self.store.nbits[b.slot] + 63) >> 6
            out.append(self.store.read(b.slot).to_bytes(8 * nw, "little"))
        lows = []
        for b in blocks:
            lows.extend(self.arrays[b.array_id].get_many(b.offset, b.count))
        out.append(pack_fields(np.asarray(lows, dtype=np.int64), self.mu).tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int, params: ClassParams) -> tuple["SmallSetTree", int]:
        if len(data) - offset < _TREE_HEADER.size:
            raise FormatError("truncated tree header")
        universe, n, mu, nb = _TREE_HEADER.unpack_from(data, offset)
        pos = offset + _TREE_HEADER.size
        counts = array("I")
        counts.frombytes(bytes(data[pos:pos + 4 * nb]))
        pos += 4 * nb
        hbits = array("I")
        hbits.frombytes(bytes(data[pos:pos + 4 * nb]))
        pos += 4 * nb
        if len(counts) != nb or len(hbits) != nb or sum(counts) != n:
            raise FormatError("tree block table inconsistent")
        highs = []
        for bits in hbits:
            nw = (bits + 63) >> 6
            highs.append(int.from_bytes(data[pos:pos + 8 * nw], "little"))
            pos += 8 * nw
        nlw = (n * mu + 63) >> 6
        lw = array("Q")
        lw.frombytes(bytes(data[pos:pos + 8 * nlw]))
        pos += 8 * nlw
        lows = unpack_fields(lw, n, mu).tolist()
        values = []
        prev_last = -1
        k = 0
        for c, h in zip(counts, highs):
            lo = prev_last + 1
            i = 0
            while h:
                t = h & -h
                values.append(lo + ((((t.bit_length() - 1) - i) << mu) | lows[k]))
                h ^= t
                i += 1
                k += 1
            if i != c:
                raise FormatError("block high part does not match its count")
            prev_last = values[-1] if values else prev_last
        t = cls.__new__(cls)
        t.params = params
        t.universe = universe
        t.base = 0
        t.prev = t.next = t.parent = None
        t.eps = 0.5
        t.seg_cap = max(1, math.ceil(max(1, params.capacity // params.cap_mini) ** t.eps))
        t.updates = 0
        t.rebuilds = 0
        t.tree = CountedTree(params.tau, _count, field_bits=(8 * params.capacity + 8).bit_length())
        v = np.asarray(values, dtype=np.int64)
        bounds = np.zeros(nb + 1, dtype=np.int64)
        if nb:
            np.cumsum(np.asarray(counts, dtype=np.int64), out=bounds[1:])
            t._load(v, bounds, mu=mu)
        else:
            t._load(v, mu=mu)
        return t, pos
