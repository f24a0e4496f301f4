"""Append-only monotone set.

New values land in an uncompressed buffer of ``k`` slots.  A full buffer is
sealed: its values minus the first one are Elias-Fano encoded, the pair
(base, low width) goes into a directory, and the base is inserted in a
y-fast trie that routes predecessor queries to the right block.
"""

from __future__ import annotations

import struct
from array import array
from bisect import bisect_left
from typing import Iterable

import numpy as np

from .ef_static import EliasFano, SpaceReport, low_width
from .errors import EfsetError, FormatError, MonotonicityError, RangeError, UniverseError
from .yfast import YFastTrie

MAGIC = b"EFAO"
VERSION = 1
_HEADER = struct.Struct("<4sBBQQQQ")  # magic, version, flags, n, k, m, blocks
_ENTRY = struct.Struct("<QBI")  # base, low, count
FLAG_FROZEN = 1
FLAG_RAW_LOW = 2
MAX_SPAN = (1 << 63) - 1


class AppendOnlySet:
    """Strictly increasing sequence with append, access and predecessor."""

    def __init__(self, k: int = 256, m: int = (1 << 64) - 1, low_rule: str = "differential"):
        if k < 1:
            raise ValueError("block size k must be positive")
        if low_rule not in ("differential", "raw"):
            raise ValueError(f"unknown low rule {low_rule!r}")
        self.k = k
        self.m = m
        self.low_rule = low_rule
        self.buffer: list[int] = []
        self.blocks: list[EliasFano] = []
        self.bases: list[int] = []
        self.lows: list[int] = []
        self.counts: list[int] = []
        self.router = YFastTrie(max(1, m.bit_length()))
        self.n = 0
        self.frozen = False
        self._last: int | None = None

    @classmethod
    def from_values(cls, values: Iterable[int], **kw) -> "AppendOnlySet":
        s = cls(**kw)
        s.extend(values)
        return s

    # ---------------------------------------------------------------- appends
    def append(self, x: int) -> None:
        if self.frozen:
            raise EfsetError("set is frozen")
        if not 0 <= x <= self.m:
            raise UniverseError(f"{x} outside [0, {self.m}]")
        if self._last is not None and x <= self._last:
            raise MonotonicityError(f"append {x} after {self._last}", index=self.n)
        buf = self.buffer
        buf.append(x)
        self._last = x
        self.n += 1
        if len(buf) == self.k:
            self._seal()

    def extend(self, values: Iterable[int]) -> None:
        for x in values:
            self.append(x)

    def _low_for(self, vals: list[int]) -> int:
        span = max(1, vals[-1] - vals[0])
        if self.low_rule == "raw":
            return low_width(len(vals), max(1, vals[-1]))
        return low_width(len(vals), span)

    def _seal(self) -> None:
        buf = self.buffer
        base = buf[0]
        span = buf[-1] - base
        if span > MAX_SPAN:
            raise UniverseError("block span exceeds 63 bits")
        low = self._low_for(buf)
        diffs = np.asarray(buf, dtype=np.uint64) - np.uint64(base)
        ef = EliasFano.encode(diffs.astype(np.int64), span, ell=low)
        self.router.insert(base, len(self.blocks))
        self.blocks.append(ef)
        self.bases.append(base)
        self.lows.append(low)
        self.counts.append(len(buf))
        self.buffer = []

    def freeze(self) -> None:
        """Seal the partial buffer as a short final block; no appends after this."""
        if self.buffer:
            self._seal()
        self.frozen = True

    # ---------------------------------------------------------------- queries
    def __len__(self) -> int:
        return self.n

    def access(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise RangeError(f"access({i}) on set of size {self.n}")
        p = i // self.k
        if p < len(self.blocks):
            return self.bases[p] + self.blocks[p].access(i - p * self.k)
        return self.buffer[i - len(self.blocks) * self.k]

    __getitem__ = access

    def predecessor(self, x: int) -> int | None:
        """Largest value strictly below x, or None."""
        buf = self.buffer
        if buf and x > buf[0]:
            return buf[bisect_left(buf, x) - 1]
        if x <= 0:
            return None
        hit = self.router.predecessor(min(x, 1 << self.router.w))
        if hit is None:
            return None
        base, p = hit
        return base + self.blocks[p].predecessor(x - base)

    def __iter__(self):
        for base, ef in zip(self.bases, self.blocks):
            for v in ef.decode():
                yield base + v
        yield from self.buffer

    def values(self) -> list[int]:
        return list(self)

    def max(self) -> int | None:
        return self._last

    # ------------------------------------------------------------------ audit
    def audit(self) -> list[str]:
        errs = []
        nb = len(self.blocks)
        if not len(self.bases) == len(self.lows) == len(self.counts) == nb == len(self.router):
            errs.append("directory, blocks and router disagree on the block count")
        for p, c in enumerate(self.counts):
            if c != self.k and not (self.frozen and p == nb - 1):
                errs.append(f"block {p} holds {c} values, expected {self.k}")
        if sum(self.counts) + len(self.buffer) != self.n:
            errs.append("element count mismatch")
        vals = self.values()
        if any(b <= a for a, b in zip(vals, vals[1:])):
            errs.append("sequence not strictly increasing")
        if list(self.router.items()) != [(b, p) for p, b in enumerate(self.bases)]:
            errs.append("router out of sync with the directory")
        return errs

    # ------------------------------------------------------------------ space
    def space_report(self) -> SpaceReport:
        nb = len(self.blocks)
        high = sum(len(ef.high) for ef in self.blocks)
        low = sum(ef.n * ef.ell for ef in self.blocks)
        comp = {
            "ef_high": high,
            "ef_low": low,
            "select_index": sum(ef.high.index_bits() for ef in self.blocks),
            "directory": nb * (64 + 8 + 32),
            "router": self.router.size_bits(payload_bits=max(1, nb).bit_length()),
            "buffer": self.k * 64,
            "header": 4 * 64,
        }
        m = self._last if self._last is not None else 0
        return SpaceReport.from_components(self.n, m, comp)

    def payload_bits(self) -> int:
        return sum(ef.payload_bits for ef in self.blocks)

    # ---------------------------------------------------------- serialization
    def to_bytes(self) -> bytes:
        flags = (FLAG_FROZEN if self.frozen else 0) | (FLAG_RAW_LOW if self.low_rule == "raw" else 0)
        out = [_HEADER.pack(MAGIC, VERSION, flags, self.n, self.k, self.m, len(self.blocks))]
        for b, lo, c in zip(self.bases, self.lows, self.counts):
            out.append(_ENTRY.pack(b, lo, c))
        for ef in self.blocks:
            out.append(ef.to_bytes())
        out.append(array("Q", self.buffer).tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["AppendOnlySet", int]:
        if len(data) - offset < _HEADER.size:
            raise FormatError("truncated EFAO header")
        magic, version, flags, n, k, m, nb = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"unsupported EFAO version {version}")
        s = cls(k, m, "raw" if flags & FLAG_RAW_LOW else "differential")
        pos = offset + _HEADER.size
        if len(data) - pos < nb * _ENTRY.size:
            raise FormatError("truncated EFAO directory")
        for _ in range(nb):
            b, lo, c = _ENTRY.unpack_from(data, pos)
            pos += _ENTRY.size
            s.bases.append(b)
            s.lows.append(lo)
            s.counts.append(c)
        for p in range(nb):
            ef, pos = EliasFano.from_bytes(data, pos)
            if ef.n != s.counts[p] or ef.ell != s.lows[p]:
                raise FormatError(f"block {p} disagrees with its directory entry")
            s.blocks.append(ef)
            s.router.insert(s.bases[p], p)
        nbuf = n - sum(s.counts)
        if nbuf < 0 or nbuf >= k or len(data) - pos < 8 * nbuf:
            raise FormatError("EFAO buffer length inconsistent")
        buf = array("Q")
        buf.frombytes(bytes(data[pos:pos + 8 * nbuf]))
        pos += 8 * nbuf
        s.buffer = buf.tolist()
        s.n = n
        s.frozen = bool(flags & FLAG_FROZEN)
        if n:
            s._last = s.buffer[-1] if s.buffer else s.bases[-1] + s.blocks[-1].access(s.counts[-1] - 1)
        return s, pos
