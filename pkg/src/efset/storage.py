"""Storage substrates for the dynamic structures.

:class:`TieredArray` is a two-level tiered vector of fixed-width integers:
O(1) access, O(n^eps + n^(1-eps)) insert/delete.  :class:`BlockStore` keeps a
collection of variable-length bit blocks in one word arena with O(1) address
lookup and in-place realloc whenever the allocated words suffice.
"""

from __future__ import annotations

import math
from array import array

import numpy as np

from .errors import CapacityError, RangeError


def pack_segments(values: np.ndarray, width: int, cap: int) -> list[int]:
    """Pack ``values`` into ints of ``cap`` fields of ``width`` bits each."""
    n = int(values.size)
    if n == 0:
        return []
    nseg = -(-n // cap)
    if width == 0:
        return [0] * nseg
    bits = ((values.astype(np.uint64)[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1))
    raw = np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()
    seg_bits = cap * width
    mask = (1 << seg_bits) - 1
    out = []
    for s in range(nseg):
        start = s * seg_bits
        b0 = start >> 3
        chunk = int.from_bytes(raw[b0:((start + seg_bits + 7) >> 3) + 1], "little")
        out.append((chunk >> (start & 7)) & mask)
    return out


class TieredArray:
    """Sequence of ``width``-bit unsigned ints in packed segments.

    Every segment holds exactly ``cap`` elements except the last, so
    ``get(i)`` touches one directory slot and one segment.  Segments are
    Python ints used as bit strings.
    """

    __slots__ = ("width", "cap", "segs", "count", "_mask", "_seg_mask", "_seg_bits")

    def __init__(self, width: int, capacity_hint: int = 1024, eps: float = 0.5,
                 cap: int | None = None):
        if width < 0:
            raise ValueError("negative element width")
        if cap is None:
            cap = max(1, math.ceil(max(1, capacity_hint) ** eps))
        self.width = width
        self.cap = cap
        self.segs: list[int] = []
        self.count = 0
        self._mask = (1 << width) - 1
        self._seg_bits = cap * width
        self._seg_mask = (1 << self._seg_bits) - 1

    @classmethod
    def from_values(cls, values, width: int, capacity_hint: int | None = None,
                    eps: float = 0.5, cap: int | None = None) -> "TieredArray":
        v = np.asarray(values, dtype=np.int64)
        if capacity_hint is None:
            capacity_hint = max(1, int(v.size))
        ta = cls(width, capacity_hint, eps, cap)
        ta.segs = pack_segments(v, width, ta.cap)
        ta.count = int(v.size)
        return ta

    def __len__(self) -> int:
        return self.count

    def get(self, i: int) -> int:
        if not 0 <= i < self.count:
            raise RangeError(f"index {i} outside [0, {self.count})")
        s, o = divmod(i, self.cap)
        return (self.segs[s] >> (o * self.width)) & self._mask

    __getitem__ = get

    def set(self, i: int, v: int) -> None:
        if not 0 <= i < self.count:
            raise RangeError(f"index {i} outside [0, {self.count})")
        s, o = divmod(i, self.cap)
        sh = o * self.width
        seg = self.segs[s]
        self.segs[s] = seg & ~(self._mask << sh) | ((v & self._mask) << sh)

    def get_many(self, start: int, n: int) -> list[int]:
        if n == 0:
            return []
        if start < 0 or start + n > self.count:
            raise RangeError(f"range [{start}, {start + n}) outside [0, {self.count})")
        w = self.width
        if not w:
            return [0] * n
        mask = self._mask
        cap = self.cap
        s, o = divmod(start, cap)
        out = []
        segs = self.segs
        while n:
            seg = segs[s] >> (o * w)
            take = min(n, cap - o)
            for _ in range(take):
                out.append(seg & mask)
                seg >>= w
            n -= take
            s += 1
            o = 0
        return out

    def set_many(self, start: int, values) -> None:
        for k, v in enumerate(values):
            self.set(start + k, v)

    def insert(self, i: int, v: int) -> None:
        if not 0 <= i <= self.count:
            raise RangeError(f"insert position {i} outside [0, {self.count}]")
        w = self.width
        cap = self.cap
        segs = self.segs
        s, o = divmod(i, cap)
        v &= self._mask
        if s == len(segs):
            segs.append(v)
            self.count += 1
            return
        seg = segs[s]
        sh = o * w
        low = seg & ((1 << sh) - 1)
        seg = low | (v << sh) | ((seg >> sh) << (sh + w))
        top = self._seg_bits
        # push the overflowing last field of each full segment into the next
        last = len(segs) - 1
        while s < last:
            carry = seg >> top
            segs[s] = seg & self._seg_mask
            s += 1
            seg = (segs[s] << w) | carry
        self.count += 1
        tail_len = self.count - cap * last
        if tail_len > cap:
            segs[s] = seg & self._seg_mask
            segs.append(seg >> top)
        else:
            segs[s] = seg

    def delete(self, i: int) -> int:
        if not 0 <= i < self.count:
            raise RangeError(f"delete position {i} outside [0, {self.count})")
        w = self.width
        cap = self.cap
        segs = self.segs
        s, o = divmod(i, cap)
        seg = segs[s]
        sh = o * w
        v = (seg >> sh) & self._mask
        seg = (seg & ((1 << sh) - 1)) | ((seg >> (sh + w)) << sh)
        hi = (cap - 1) * w
        last = len(segs) - 1
        while s < last:
            nxt = segs[s + 1]
            segs[s] = seg | ((nxt & self._mask) << hi)
            s += 1
            seg = nxt >> w
        self.count -= 1
        if self.count == cap * last:
            segs.pop()
        else:
            segs[s] = seg
        return v

    def to_list(self) -> list[int]:
        return self.get_many(0, self.count)

    def size_bits(self) -> dict:
        """Payload, unused slack in the tail segment, and the directory."""
        return {
            "payload": self.count * self.width,
            "slack": (len(self.segs) * self.cap - self.count) * self.width,
            "directory": len(self.segs) * 64 + 3 * 64,
        }


class BlockStore:
    """Variable-length bit blocks in one contiguous word arena.

    ``address(i)`` is a table lookup.  ``realloc`` stays in place while the
    block's allocated words suffice, otherwise the block moves to the arena
    end; the arena is compacted once dead words exceed ``compact_ratio`` of it.
    """

    def __init__(self, max_block_bits: int, compact_ratio: float = 0.5):
        self.max_block_bits = max_block_bits
        self.compact_ratio = compact_ratio
        self.arena = array("Q")
        self.offsets: list[int] = []
        self.nbits: list[int] = []
        self.capw: list[int] = []
        self.free_ids: list[int] = []
        self.dead_words = 0
        self.compactions = 0
        self.moves = 0

    @classmethod
    def from_blocks(cls, blocks: list[tuple[int, int]], max_block_bits: int,
                    compact_ratio: float = 0.5) -> "BlockStore":
        """Bulk load ``(value, nbits)`` pairs; block ids follow list order."""
        st = cls(max_block_bits, compact_ratio)
        nb = [b for _, b in blocks]
        capw = [(b + 63) >> 6 or 1 for b in nb]
        offs = [0] * len(blocks)
        total = 0
        for i, c in enumerate(capw):
            offs[i] = total
            total += c
        arena = np.zeros(total, dtype=np.uint64)
        single = [i for i, c in enumerate(capw) if c == 1]
        if single:
            arena[np.asarray([offs[i] for i in single], dtype=np.int64)] = np.asarray(
                [blocks[i][0] for i in single], dtype=np.uint64)
        for i, c in enumerate(capw):
            if c > 1:
                val = blocks[i][0]
                for k in range(c):
                    arena[offs[i] + k] = (val >> (64 * k)) & 0xFFFFFFFFFFFFFFFF
        st.arena = array("Q", arena.tobytes())
        st.offsets = offs
        st.nbits = nb
        st.capw = capw
        return st

    def __len__(self) -> int:
        return len(self.offsets) - len(self.free_ids)

    def _check_id(self, i: int) -> None:
        if not 0 <= i < len(self.offsets) or self.offsets[i] < 0:
            raise RangeError(f"no live block {i}")

    def alloc(self, nbits: int) -> int:
        if nbits > self.max_block_bits:
            raise CapacityError(f"block of {nbits} bits exceeds limit {self.max_block_bits}")
        need = (nbits + 63) >> 6 or 1
        off = len(self.arena)
        self.arena.extend(array("Q", bytes(8 * need)))
        if self.free_ids:
            i = self.free_ids.pop()
            self.offsets[i] = off
            self.nbits[i] = nbits
            self.capw[i] = need
        else:
            i = len(self.offsets)
            self.offsets.append(off)
            self.nbits.append(nbits)
            self.capw.append(need)
        return i

    def free(self, i: int) -> None:
        self._check_id(i)
        off, c = self.offsets[i], self.capw[i]
        for k in range(off, off + c):
            self.arena[k] = 0
        self.dead_words += c
        self.offsets[i] = -1
        self.nbits[i] = 0
        self.capw[i] = 0
        self.free_ids.append(i)
        self._maybe_compact()

    def address(self, i: int) -> tuple[int, int]:
        """(word offset in the arena, bit length) of block i."""
        self._check_id(i)
        return self.offsets[i], self.nbits[i]

    def read(self, i: int) -> int:
        off = self.offsets[i]
        c = self.capw[i]
        if c == 1:
            return self.arena[off]
        return int.from_bytes(self.arena[off:off + c].tobytes(), "little")

    def write(self, i: int, value: int) -> None:
        """Overwrite block i; value must fit in its current bit length."""
        off = self.offsets[i]
        c = self.capw[i]
        if c == 1:
            self.arena[off] = value
        else:
            self.arena[off:off + c] = array("Q", value.to_bytes(8 * c, "little"))

    def realloc(self, i: int, new_bits: int) -> None:
        """Resize block i to new_bits, preserving the common prefix of bits."""
        self._check_id(i)
        if new_bits > self.max_block_bits:
            raise CapacityError(f"block of {new_bits} bits exceeds limit {self.max_block_bits}")
        old_bits = self.nbits[i]
        need = (new_bits + 63) >> 6 or 1
        if need <= self.capw[i]:
            if new_bits < old_bits:
                val = self.read(i) & ((1 << new_bits) - 1)
                self.write(i, val)
            self.nbits[i] = new_bits
            return
        val = self.read(i)
        old_off, old_c = self.offsets[i], self.capw[i]
        for k in range(old_off, old_off + old_c):
            self.arena[k] = 0
        self.dead_words += old_c
        off = len(self.arena)
        self.arena.extend(array("Q", bytes(8 * need)))
        self.offsets[i] = off
        self.capw[i] = need
        self.nbits[i] = new_bits
        self.write(i, val)
        self.moves += 1
        self._maybe_compact()

    def _maybe_compact(self) -> None:
        if self.dead_words and self.dead_words > self.compact_ratio * len(self.arena):
            self.compact()

    def compact(self) -> None:
        old = self.arena
        new = array("Q")
        for i, off in enumerate(self.offsets):
            if off < 0:
                continue
            self.offsets[i] = len(new)
            new.extend(old[off:off + self.capw[i]])
        self.arena = new
        self.dead_words = 0
        self.compactions += 1

    def size_bits(self) -> dict:
        payload = sum(self.nbits)
        arena_bits = 64 * len(self.arena)
        k = max(2, len(self.offsets))
        per_block = max(1, len(self.arena)).bit_length() + max(1, self.max_block_bits).bit_length() \
            + max(1, max(self.capw, default=1)).bit_length()
        return {
            "payload": payload,
            "slack": arena_bits - payload,
            "bookkeeping": k * per_block + len(self.free_ids) * (k - 1).bit_length() + 3 * 64,
        }
