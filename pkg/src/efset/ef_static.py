"""Static Elias-Fano encoding of monotone integer sequences.

Each value is split into ``ell`` low bits, stored verbatim in a packed array,
and the remaining high bits, stored in negated unary in a bitvector: the
value of rank ``i`` sets bit ``(v >> ell) + i``.  Elements are drawn from the
inclusive universe ``[0, m]``.
"""

from __future__ import annotations

import math
import struct
from array import array
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .bitvec import BitVector
from .errors import FormatError, OrderingError, RangeError, UniverseError

MAGIC = b"EFST"
VERSION = 1
_HEADER = struct.Struct("<4sBQQQ")

# b_bits switches from exact binomials to high-precision log-gamma above this
EXACT_BINOMIAL_LIMIT = 1 << 20


def low_width(n: int, m: int) -> int:
    """ceil(log2(m / n)), or 0 when m <= n.  Exact integer arithmetic."""
    if n <= 0 or m <= n:
        return 0
    q = -(-m // n)  # ceil(m/n); ceil(log2(m/n)) == ceil(log2(ceil(m/n)))
    return (q - 1).bit_length()


def high_length(n: int, m: int, ell: int) -> int:
    """Length of the negated-unary high bitmap.

    ``n + 2**floor(log2 n)`` when every high part fits below that many
    buckets, otherwise just long enough for the largest possible high part.
    """
    if n == 0:
        return 0
    return n + max(1 << (n.bit_length() - 1), m >> ell)


def ef_bits(n: int, m: int) -> int:
    """EF(n, m) = n*phi + n + ceil(m / 2**phi) with phi = ceil(log2(m/n))."""
    if n == 0:
        return 0
    phi = low_width(n, m)
    return n * phi + n + -(-m // (1 << phi))


def ef_bound(n: int, m: int) -> int:
    """The closed-form upper bound n*ceil(log2(m/n)) + 2n."""
    return n * low_width(n, m) + 2 * n


def b_bits(n: int, m: int) -> int:
    """ceil(log2 C(m+1, n)): the minimum bits for an n-subset of [0, m]."""
    u = m + 1
    if n < 0 or n > u:
        raise RangeError(f"cannot choose {n} elements from a universe of {u}")
    k = min(n, u - n)
    if k == 0:
        return 0
    if k == 1:
        return (u - 1).bit_length()
    if u <= EXACT_BINOMIAL_LIMIT or k <= 64:
        return (math.comb(u, k) - 1).bit_length()
    import mpmath

    # generous precision: the value has about log2(u) * k bits of magnitude
    prec = max(64, int(k * math.log2(u)).bit_length() + 80)
    with mpmath.workprec(prec):
        lg = (mpmath.loggamma(u + 1) - mpmath.loggamma(k + 1) - mpmath.loggamma(u - k + 1))
        bits = lg / mpmath.log(2)
        ceil = int(mpmath.ceil(bits))
        # C(u, k) with 2 <= k <= u-2 is never a power of two beyond these cases,
        # but guard against a value sitting within rounding noise of an integer.
        if abs(bits - mpmath.nint(bits)) < mpmath.mpf(2) ** (-prec // 2):
            return (math.comb(u, k) - 1).bit_length()
    return ceil


@dataclass
class SpaceReport:
    """Bit accounting for one structure.

    ``redundancy_bits`` is measured bits minus EF(n, m).
    """

    n: int
    m: int
    ef_bits: int
    b_bits: int
    measured_bits: int
    components: dict = field(default_factory=dict)

    @property
    def redundancy_bits(self) -> int:
        return self.measured_bits - self.ef_bits

    @property
    def redundancy_per_n(self) -> float:
        return self.redundancy_bits / self.n if self.n else 0.0

    @classmethod
    def from_components(cls, n: int, m: int, components: dict) -> "SpaceReport":
        return cls(n, m, ef_bits(n, m), b_bits(n, m), sum(components.values()), dict(components))


def _check_sorted(v: np.ndarray, m: int, strict: bool) -> None:
    if v.size == 0:
        return
    if v[0] < 0:
        raise UniverseError(f"negative value {int(v[0])} at index 0")
    d = np.diff(v)
    bad = np.flatnonzero(d <= 0 if strict else d < 0)
    if bad.size:
        i = int(bad[0]) + 1
        kind = "strictly increasing" if strict else "non-decreasing"
        raise OrderingError(f"input not {kind} at index {i}", index=i)
    if int(v[-1]) > m:
        raise UniverseError(f"value {int(v[-1])} exceeds universe bound {m}")


def _as_array(values) -> np.ndarray:
    if isinstance(values, np.ndarray):
        if values.dtype == np.int64:
            return values
        if values.dtype.kind in "iu" and (values.size == 0 or int(values.max()) < 1 << 63):
            return values.astype(np.int64)
    vals = list(values)
    if vals and (max(vals) >= 1 << 63 or min(vals) < -(1 << 63)):
        raise UniverseError("values must fit in 63 bits")
    return np.asarray(vals, dtype=np.int64)


def pack_fields(values: np.ndarray, width: int) -> array:
    """Pack non-negative ints into ``width``-bit fields, LSB-first, 64-bit words."""
    n = int(values.size)
    nw = (n * width + 63) >> 6
    if width == 0 or n == 0:
        return array("Q", bytes(8 * nw))
    v = values.astype(np.uint64) & np.uint64((1 << width) - 1)
    out = np.zeros(nw + 1, dtype=np.uint64)
    bitpos = np.arange(n, dtype=np.uint64) * np.uint64(width)
    w = (bitpos >> np.uint64(6)).astype(np.int64)
    s = bitpos & np.uint64(63)
    np.bitwise_or.at(out, w, v << s)
    spill = (s + np.uint64(width)) > np.uint64(64)
    if spill.any():
        np.bitwise_or.at(out, w[spill] + 1, v[spill] >> (np.uint64(64) - s[spill]))
    return array("Q", out[:nw].tobytes())


def unpack_fields(words: array, n: int, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(n, dtype=np.int64)
    raw = np.frombuffer(words.tobytes(), dtype=np.uint64)
    bits = np.unpackbits(raw.view(np.uint8), bitorder="little")[: n * width]
    bits = bits.reshape(n, width).astype(np.int64)
    return (bits << np.arange(width, dtype=np.int64)).sum(axis=1)


class EliasFano:
    """Immutable Elias-Fano sequence with O(1) access.

    Build with :meth:`encode`.  ``high`` is a frozen :class:`BitVector`;
    ``low`` holds ``n`` fields of ``ell`` bits.
    """

    __slots__ = ("n", "m", "ell", "low", "high", "_mask")

    def __init__(self, n: int, m: int, ell: int, low: array, high: BitVector):
        self.n = n
        self.m = m
        self.ell = ell
        self.low = low
        self.high = high.freeze()
        self._mask = (1 << ell) - 1

    @classmethod
    def encode(cls, values, m: int, ell: int | None = None, strict: bool = False) -> "EliasFano":
        v = _as_array(values)
        n = int(v.size)
        if n < 1:
            raise RangeError("Elias-Fano needs at least one value")
        if m < 0 or m >= 1 << 63:
            raise UniverseError(f"universe bound {m} out of range")
        _check_sorted(v, m, strict)
        if ell is None:
            ell = low_width(n, m)
        hlen = high_length(n, m, ell)
        pos = (v >> ell) + np.arange(n, dtype=np.int64)
        high = BitVector.from_positions(hlen, pos)
        low = pack_fields(v & ((1 << ell) - 1), ell) if ell else array("Q")
        return cls(n, m, ell, low, high)

    # ----------------------------------------------------------------- access
    def __len__(self) -> int:
        return self.n

    def _low(self, i: int) -> int:
        ell = self.ell
        if not ell:
            return 0
        bit = i * ell
        w = bit >> 6
        s = bit & 63
        low = self.low
        x = low[w] >> s
        if s + ell > 64:
            x |= low[w + 1] << (64 - s)
        return x & self._mask

    def access(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise RangeError(f"access({i}) on sequence of length {self.n}")
        return ((self.high.select1(i) - i) << self.ell) | self._low(i)

    __getitem__ = access

    def __iter__(self) -> Iterator[int]:
        return iter(self.decode())

    def decode(self) -> list[int]:
        hb = np.frombuffer(self.high.words.tobytes(), dtype=np.uint8)
        pos = np.flatnonzero(np.unpackbits(hb, bitorder="little"))[: self.n]
        highs = pos - np.arange(self.n)
        lows = unpack_fields(self.low, self.n, self.ell)
        return ((highs << self.ell) | lows).tolist()

    def _band(self, hx: int) -> tuple[int, int]:
        """Rank range [i, j) of the elements whose high part equals hx."""
        zeros = self.high.zeros
        if hx == 0:
            i = 0
        elif hx - 1 < zeros:
            # ones before the zero closing bucket hx-1
            i = self.high.select0(hx - 1) - (hx - 1)
        else:
            i = self.n
        j = self.high.select0(hx) - hx if hx < zeros else self.n
        return i, j

    def predecessor(self, x: int) -> int | None:
        """Largest element strictly below x, or None."""
        if x <= 0:
            return None
        if x > self.m:
            return self.access(self.n - 1)
        i, j = self._band(x >> self.ell)
        xl = x & self._mask
        lo, hi = i, j
        while lo < hi:  # first index in band whose low part >= xl
            mid = (lo + hi) >> 1
            if self._low(mid) < xl:
                lo = mid + 1
            else:
                hi = mid
        if lo > 0:
            return self.access(lo - 1)
        return None

    def successor(self, x: int) -> int | None:
        """Smallest element >= x, or None."""
        if x <= 0:
            return self.access(0)
        if x > self.m:
            return None
        i, j = self._band(x >> self.ell)
        xl = x & self._mask
        lo, hi = i, j
        while lo < hi:
            mid = (lo + hi) >> 1
            if self._low(mid) < xl:
                lo = mid + 1
            else:
                hi = mid
        return self.access(lo) if lo < self.n else None

    def __contains__(self, x: int) -> bool:
        return self.successor(x) == x

    # ------------------------------------------------------------------ space
    @property
    def payload_bits(self) -> int:
        return len(self.high) + self.n * self.ell

    def space_report(self) -> SpaceReport:
        return SpaceReport.from_components(self.n, self.m, {
            "high": len(self.high),
            "low": self.n * self.ell,
            "select_index": self.high.index_bits(),
            "header": 3 * 64,
        })

    # ---------------------------------------------------------- serialization
    def to_bytes(self) -> bytes:
        return (_HEADER.pack(MAGIC, VERSION, self.n, self.m, self.ell)
                + self.high.to_bytes() + self.low.tobytes())

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["EliasFano", int]:
        if len(data) - offset < _HEADER.size:
            raise FormatError("truncated EFST header")
        magic, version, n, m, ell = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"unsupported EFST version {version}")
        high, pos = BitVector.from_bytes(data, offset + _HEADER.size)
        if high.ones != n:
            raise FormatError("EFST high part does not hold n ones")
        nbytes = 8 * ((n * ell + 63) >> 6)
        if pos + nbytes > len(data):
            raise FormatError("truncated EFST low part")
        low = array("Q")
        low.frombytes(bytes(data[pos:pos + nbytes]))
        return cls(n, m, ell, low, high), pos + nbytes


def encode(values, m: int) -> EliasFano:
    return EliasFano.encode(values, m)


def split(values: Sequence[int], k: int) -> tuple[EliasFano, EliasFano, int]:
    """Split a sorted set at rank k into two independently encoded parts.

    The first part keeps its values with universe ``S[k-1]``; the second is
    re-mapped to ``S[l] - S[k-1] + 1`` with universe ``S[n-1] - S[k-1] + 1``.
    Returns ``(first, second, pivot)`` with ``pivot = S[k-1]``.
    """
    v = _as_array(values)
    n = int(v.size)
    if not 1 <= k < n:
        raise RangeError(f"split rank {k} outside [1, {n})")
    pivot = int(v[k - 1])
    first = EliasFano.encode(v[:k], pivot)
    rest = v[k:] - pivot + 1
    second = EliasFano.encode(rest, int(v[-1]) - pivot + 1)
    return first, second, pivot


def join(first: EliasFano, second: EliasFano, pivot: int) -> list[int]:
    """Inverse of :func:`split`."""
    return first.decode() + [x + pivot - 1 for x in second.decode()]


class SampledPredecessor:
    """Elias-Fano plus a y-fast trie over every ``block_len``-th element.

    The trie narrows a predecessor query to one logical block, which is then
    binary searched through O(1) accesses.
    """

    def __init__(self, ef: EliasFano, block_len: int, router):
        self.ef = ef
        self.block_len = block_len
        self.router = router

    @classmethod
    def build(cls, values, m: int, block_len: int) -> "SampledPredecessor":
        from .yfast import YFastTrie

        if block_len < 2:
            raise RangeError("block_len must be at least 2")
        ef = EliasFano.encode(values, m, strict=True)
        router = YFastTrie(max(1, m.bit_length()))
        for j in range(0, ef.n, block_len):
            router.insert(ef.access(j), j // block_len)
        return cls(ef, block_len, router)

    def __len__(self) -> int:
        return self.ef.n

    def access(self, i: int) -> int:
        return self.ef.access(i)

    def predecessor(self, x: int) -> int | None:
        hit = self.router.predecessor(x)
        if hit is None:
            return None
        b = hit[1]
        lo = b * self.block_len
        hi = min(lo + self.block_len, self.ef.n)
        ef = self.ef
        # first index in the block holding a value >= x; the head is < x
        while lo < hi:
            mid = (lo + hi) >> 1
            if ef.access(mid) < x:
                lo = mid + 1
            else:
                hi = mid
        return ef.access(lo - 1)

    def space_report(self) -> SpaceReport:
        rep = self.ef.space_report()
        rep.components["router"] = self.router.size_bits()
        rep.measured_bits = sum(rep.components.values())
        return rep


def build_sampled(values, m: int, block_len: int) -> SampledPredecessor:
    return SampledPredecessor.build(values, m, block_len)
