"""y-fast trie over w-bit keys with satellite payloads.

Keys are kept in sorted buckets of Theta(w) keys.  The minimum of each bucket
is its representative, and the representatives live in an x-fast trie: one
hash table per prefix length, each prefix mapped to the smallest and largest
representative below it.  Predecessor queries binary-search the prefix
lengths, which takes O(log w) probes, then bisect one bucket.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import Any, Iterator


class _Bucket:
    __slots__ = ("keys", "vals", "prev", "next")

    def __init__(self, keys, vals):
        self.keys = keys
        self.vals = vals
        self.prev = None
        self.next = None


class YFastTrie:
    def __init__(self, width: int):
        if width < 1:
            raise ValueError("key width must be positive")
        self.w = width
        self.bucket_max = 2 * width
        self.bucket_min = max(1, width // 4)
        # levels[l] maps the l-bit prefix of a representative to [min_rep, max_rep]
        self.levels: list[dict[int, list[int]]] = [dict() for _ in range(width + 1)]
        self.buckets: dict[int, _Bucket] = {}
        self.head: _Bucket | None = None
        self.n = 0
        self.probes = 0  # hash probes made by the last level search

    def __len__(self) -> int:
        return self.n

    def _check(self, key: int) -> None:
        if not 0 <= key < 1 << self.w:
            raise ValueError(f"key {key} does not fit in {self.w} bits")

    # ------------------------------------------------------------- x-fast part
    def _rep_le(self, y: int) -> int | None:
        """Largest representative <= y."""
        if not self.buckets or y < 0:
            return None
        w = self.w
        if y >= 1 << w:
            return self.levels[0][0][1]
        levels = self.levels
        lo, hi = 0, w
        probes = 0
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            probes += 1
            if (y >> (w - mid)) in levels[mid]:
                lo = mid
            else:
                hi = mid - 1
        self.probes = probes + 1
        if lo == w:
            return y
        node = levels[lo][y >> (w - lo)]
        if (y >> (w - lo - 1)) & 1:
            # the matching subtree has only a 0-branch: everything in it is < y
            return node[1]
        # only a 1-branch: everything in it is > y
        b = self.buckets[node[0]].prev
        return b.keys[0] if b is not None else None

    def _xf_insert(self, rep: int) -> None:
        w = self.w
        for l in range(w + 1):
            p = rep >> (w - l)
            node = self.levels[l].get(p)
            if node is None:
                self.levels[l][p] = [rep, rep]
            else:
                if rep < node[0]:
                    node[0] = rep
                if rep > node[1]:
                    node[1] = rep

    def _xf_delete(self, rep: int, prev_rep: int | None, next_rep: int | None) -> None:
        w = self.w
        for l in range(w + 1):
            shift = w - l
            p = rep >> shift
            lvl = self.levels[l]
            node = lvl[p]
            if node[0] == rep and node[1] == rep:
                del lvl[p]
                continue
            if node[0] == rep:
                node[0] = next_rep  # shares the prefix, else node would be gone
            if node[1] == rep:
                node[1] = prev_rep

    def _link_after(self, b: _Bucket, new: _Bucket) -> None:
        new.prev = b
        new.next = b.next
        if b.next is not None:
            b.next.prev = new
        b.next = new

    def _add_bucket(self, bucket: _Bucket, after: _Bucket | None) -> None:
        rep = bucket.keys[0]
        if after is None:
            bucket.prev = None
            bucket.next = self.head
            if self.head is not None:
                self.head.prev = bucket
            self.head = bucket
        else:
            self._link_after(after, bucket)
        self.buckets[rep] = bucket
        self._xf_insert(rep)

    def _drop_bucket(self, bucket: _Bucket, rep: int) -> None:
        prev_rep = bucket.prev.keys[0] if bucket.prev is not None else None
        nxt = bucket.next
        next_rep = nxt.keys[0] if nxt is not None else None
        self._xf_delete(rep, prev_rep, next_rep)
        del self.buckets[rep]
        if bucket.prev is not None:
            bucket.prev.next = nxt
        else:
            self.head = nxt
        if nxt is not None:
            nxt.prev = bucket.prev

    def _rekey(self, bucket: _Bucket, old_rep: int) -> None:
        """Representative changed from old_rep to bucket.keys[0]."""
        prev_rep = bucket.prev.keys[0] if bucket.prev is not None else None
        next_rep = bucket.next.keys[0] if bucket.next is not None else None
        self._xf_delete(old_rep, prev_rep, next_rep)
        del self.buckets[old_rep]
        self.buckets[bucket.keys[0]] = bucket
        self._xf_insert(bucket.keys[0])

    # ---------------------------------------------------------------- updates
    def insert(self, key: int, payload: Any = None) -> None:
        """Insert key; an existing key has its payload replaced."""
        self._check(key)
        rep = self._rep_le(key)
        if rep is None:
            b = self.head
            if b is None:
                self._add_bucket(_Bucket([key], [payload]), None)
                self.n += 1
                return
            old = b.keys[0]
            b.keys.insert(0, key)
            b.vals.insert(0, payload)
            self._rekey(b, old)
        else:
            b = self.buckets[rep]
            i = bisect_left(b.keys, key)
            if i < len(b.keys) and b.keys[i] == key:
                b.vals[i] = payload
                return
            b.keys.insert(i, key)
            b.vals.insert(i, payload)
        self.n += 1
        if len(b.keys) > self.bucket_max:
            h = len(b.keys) >> 1
            new = _Bucket(b.keys[h:], b.vals[h:])
            del b.keys[h:]
            del b.vals[h:]
            self._add_bucket(new, b)

    def delete(self, key: int) -> Any:
        """Remove key and return its payload, or None if absent."""
        if not 0 <= key < 1 << self.w:
            return None
        rep = self._rep_le(key)
        if rep is None:
            return None
        b = self.buckets[rep]
        i = bisect_left(b.keys, key)
        if i == len(b.keys) or b.keys[i] != key:
            return None
        payload = b.vals[i]
        self.n -= 1
        if len(b.keys) == 1:
            self._drop_bucket(b, rep)
            return payload
        del b.keys[i]
        del b.vals[i]
        if i == 0:
            self._rekey(b, rep)
        if len(b.keys) < self.bucket_min and self.n > len(b.keys):
            self._merge(b)
        return payload

    def _merge(self, b: _Bucket) -> None:
        if b.next is not None:
            left, right = b, b.next
        else:
            left, right = b.prev, b
        self._drop_bucket(right, right.keys[0])
        left.keys.extend(right.keys)
        left.vals.extend(right.vals)
        if len(left.keys) > self.bucket_max:
            h = len(left.keys) >> 1
            new = _Bucket(left.keys[h:], left.vals[h:])
            del left.keys[h:]
            del left.vals[h:]
            self._add_bucket(new, left)

    # ---------------------------------------------------------------- queries
    def predecessor(self, x: int) -> tuple[int, Any] | None:
        """Largest stored key strictly below x, with its payload."""
        if x <= 0:
            return None
        y = x - 1
        rep = self._rep_le(y)
        if rep is None:
            return None
        b = self.buckets[rep]
        i = bisect_right(b.keys, y) - 1
        return b.keys[i], b.vals[i]

    def successor(self, x: int) -> tuple[int, Any] | None:
        """Smallest stored key >= x, with its payload."""
        rep = self._rep_le(x)
        b = self.head if rep is None else self.buckets[rep]
        if b is None:
            return None
        i = bisect_left(b.keys, x)
        if i == len(b.keys):
            b = b.next
            if b is None:
                return None
            i = 0
        return b.keys[i], b.vals[i]

    def get(self, key: int, default: Any = None) -> Any:
        rep = self._rep_le(key)
        if rep is None:
            return default
        b = self.buckets[rep]
        i = bisect_left(b.keys, key)
        if i < len(b.keys) and b.keys[i] == key:
            return b.vals[i]
        return default

    def __contains__(self, key: int) -> bool:
        sentinel = object()
        return self.get(key, sentinel) is not sentinel

    def items(self) -> Iterator[tuple[int, Any]]:
        b = self.head
        while b is not None:
            yield from zip(b.keys, b.vals)
            b = b.next

    def keys(self) -> Iterator[int]:
        for k, _ in self.items():
            yield k

    __iter__ = keys

    def min(self) -> tuple[int, Any] | None:
        if self.head is None:
            return None
        return self.head.keys[0], self.head.vals[0]

    # ------------------------------------------------------------------ audit
    def audit(self) -> list[str]:
        errs = []
        reps = []
        sizes = 0
        b = self.head
        prev_key = None
        while b is not None:
            if not b.keys:
                errs.append("empty bucket")
                break
            reps.append(b.keys[0])
            for k in b.keys:
                if prev_key is not None and k <= prev_key:
                    errs.append(f"keys out of order at {k}")
                prev_key = k
            sizes += len(b.keys)
            if len(b.keys) > self.bucket_max:
                errs.append(f"bucket {b.keys[0]} oversized ({len(b.keys)})")
            if len(b.keys) < self.bucket_min and len(self.buckets) > 1:
                errs.append(f"bucket {b.keys[0]} undersized ({len(b.keys)})")
            b = b.next
        if sizes != self.n:
            errs.append(f"key count {sizes} != n {self.n}")
        if sorted(self.buckets) != reps:
            errs.append("bucket table out of sync with the bucket list")
        w = self.w
        for l in range(w + 1):
            expect: dict[int, list[int]] = {}
            for r in reps:
                p = r >> (w - l)
                if p in expect:
                    expect[p][1] = r
                else:
                    expect[p] = [r, r]
            if expect != self.levels[l]:
                errs.append(f"prefix table at level {l} inconsistent")
        return errs

    def size_bits(self, payload_bits: int | None = None) -> int:
        """Keys + payloads in buckets, plus x-fast nodes of (min, max) pointers."""
        if payload_bits is None:
            payload_bits = max(1, len(self.buckets)).bit_length()
        nodes = sum(len(lvl) for lvl in self.levels)
        bucket_bits = self.n * (self.w + payload_bits) + len(self.buckets) * 2 * 64
        return bucket_bits + nodes * (self.w + 2 * self.w)
