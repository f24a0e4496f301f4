"""Plain bitvector with a sampled rank/select index.

Bits are packed LSB-first into 64-bit words.  The vector is mutable until
:meth:`BitVector.freeze` builds the index; any later mutation bumps a
generation counter and queries against the old index raise
:class:`~efset.errors.StaleIndexError`.

All rank/select positions and occurrence indices are 0-based.
"""

from __future__ import annotations

import struct
from array import array
from bisect import bisect_right
from typing import Iterable, Iterator

import numpy as np

from .errors import FormatError, RangeError, StaleIndexError

WORD_BITS = 64
WORD_MASK = (1 << 64) - 1

# one sampled position every S_RATE occurrences
S_RATE = 512
S_SHIFT = 9
# rank superblock = 8 words
SUPER_BITS = 512
SUPER_SHIFT = 9

MAGIC = b"EFBV"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")

_BYTE_SELECT = [tuple(p for p in range(8) if b >> p & 1) for b in range(256)]


def select_in_word(word: int, r: int) -> int:
    """Position of the r-th (0-based) set bit of a 64-bit word."""
    s = 0
    c = (word & 0xFFFFFFFF).bit_count()
    if r >= c:
        r -= c
        word >>= 32
        s = 32
    c = (word & 0xFFFF).bit_count()
    if r >= c:
        r -= c
        word >>= 16
        s += 16
    c = (word & 0xFF).bit_count()
    if r >= c:
        r -= c
        word >>= 8
        s += 8
    return s + _BYTE_SELECT[word & 0xFF][r]


def select_in_int(x: int, r: int) -> int:
    """Position of the r-th set bit of an arbitrary non-negative int."""
    s = 0
    while x:
        w = x & WORD_MASK
        c = w.bit_count()
        if r < c:
            return s + select_in_word(w, r)
        r -= c
        x >>= 64
        s += 64
    raise RangeError("not enough set bits")


def _nwords(nbits: int) -> int:
    return (nbits + 63) >> 6


class SelectIndex:
    """Rank superblocks plus sampled select positions for ones and zeros."""

    __slots__ = ("generation", "rank_super", "samples1", "samples0")

    def __init__(self, generation, rank_super, samples1, samples0):
        self.generation = generation
        self.rank_super = rank_super
        self.samples1 = samples1
        self.samples0 = samples0

    @classmethod
    def build(cls, bv: "BitVector") -> "SelectIndex":
        nw = len(bv._words)
        n = bv._len
        if nw:
            words = np.frombuffer(bv._words.tobytes(), dtype=np.uint64)
            pop = np.bitwise_count(words).astype(np.int64)
        else:
            pop = np.zeros(0, dtype=np.int64)
        nsuper = (n >> SUPER_SHIFT) + 1
        padded = np.zeros(nsuper * 8, dtype=np.int64)
        padded[:nw] = pop[: nsuper * 8]
        per_super = padded.reshape(nsuper, 8).sum(axis=1)
        rank_super = np.zeros(nsuper + 1, dtype=np.uint64)
        np.cumsum(per_super, out=rank_super[1:])
        # zeros that lie inside the vector (tail bits of the last word excluded)
        valid = np.full(nw, 64, dtype=np.int64)
        if nw and n & 63:
            valid[-1] = n & 63
        pop0 = valid - pop
        samples1 = cls._samples(bv, pop, bv._ones, invert=False)
        samples0 = cls._samples(bv, pop0, n - bv._ones, invert=True)
        return cls(
            bv._generation,
            array("Q", rank_super[:nsuper].tobytes()),
            samples1,
            samples0,
        )

    @staticmethod
    def _samples(bv, pop, total, invert):
        out = array("Q")
        if total == 0:
            return out
        incl = np.cumsum(pop)
        targets = np.arange(0, total, S_RATE, dtype=np.int64)
        widx = np.searchsorted(incl, targets, side="right")
        before = incl[widx] - pop[widx]
        words = bv._words
        for t, w, b in zip(targets.tolist(), widx.tolist(), before.tolist()):
            word = words[w]
            if invert:
                word = ~word & WORD_MASK
            out.append((w << 6) + select_in_word(word, t - b))
        return out

    def size_bits(self) -> int:
        return 64 * (len(self.rank_super) + len(self.samples1) + len(self.samples0))


class BitVector:
    __slots__ = ("_words", "_len", "_ones", "_generation", "_index")

    def __init__(self, length: int = 0):
        if length < 0:
            raise RangeError("negative length")
        self._words = array("Q", bytes(8 * _nwords(length)))
        self._len = length
        self._ones = 0
        self._generation = 0
        self._index: SelectIndex | None = None

    # ------------------------------------------------------------------ build
    @classmethod
    def from_positions(cls, length: int, positions: Iterable[int]) -> "BitVector":
        pos = np.asarray(list(positions) if not isinstance(positions, np.ndarray) else positions,
                         dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() >= length):
            raise RangeError("bit position out of range")
        bits = np.zeros(_nwords(length) * 64, dtype=np.uint8)
        bits[pos] = 1
        packed = np.packbits(bits, bitorder="little")
        bv = cls.__new__(cls)
        bv._words = array("Q", packed.tobytes())
        bv._len = length
        bv._ones = int(bits.sum())
        bv._generation = 0
        bv._index = None
        return bv

    @classmethod
    def from_bitstring(cls, s: str) -> "BitVector":
        """Bits in position order: ``s[0]`` is position 0."""
        return cls.from_positions(len(s), [i for i, c in enumerate(s) if c == "1"])

    @classmethod
    def _from_words(cls, words: array, length: int, ones: int | None = None) -> "BitVector":
        bv = cls.__new__(cls)
        bv._words = words
        bv._len = length
        if ones is None:
            ones = sum(w.bit_count() for w in words)
        bv._ones = ones
        bv._generation = 0
        bv._index = None
        return bv

    # --------------------------------------------------------------- mutation
    def set_bit(self, pos: int) -> None:
        if not 0 <= pos < self._len:
            raise RangeError(f"bit position {pos} outside [0, {self._len})")
        w = pos >> 6
        bit = 1 << (pos & 63)
        word = self._words[w]
        if not word & bit:
            self._words[w] = word | bit
            self._ones += 1
            self._generation += 1

    # ----------------------------------------------------------------- access
    def __len__(self) -> int:
        return self._len

    def __getitem__(self, pos: int) -> int:
        if not 0 <= pos < self._len:
            raise RangeError(f"bit position {pos} outside [0, {self._len})")
        return (self._words[pos >> 6] >> (pos & 63)) & 1

    get = __getitem__

    @property
    def ones(self) -> int:
        return self._ones

    @property
    def zeros(self) -> int:
        return self._len - self._ones

    @property
    def words(self) -> array:
        return self._words

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._len == other._len and self._words == other._words

    def __repr__(self) -> str:
        return f"BitVector(len={self._len}, ones={self._ones})"

    def to_bitstring(self) -> str:
        return "".join(str(self[i]) for i in range(self._len))

    def iter_ones(self) -> Iterator[int]:
        for wi, word in enumerate(self._words):
            while word:
                t = word & -word
                yield (wi << 6) + t.bit_length() - 1
                word ^= t

    # ------------------------------------------------------------ rank/select
    def freeze(self) -> "BitVector":
        """Build (or rebuild) the rank/select index for the current state."""
        if self._index is None or self._index.generation != self._generation:
            self._index = SelectIndex.build(self)
        return self

    @property
    def frozen(self) -> bool:
        return self._index is not None and self._index.generation == self._generation

    def _idx(self) -> SelectIndex:
        idx = self._index
        if idx is None:
            raise StaleIndexError("bitvector has no rank/select index; call freeze()")
        if idx.generation != self._generation:
            raise StaleIndexError("bitvector mutated since its index was built")
        return idx

    def rank1(self, pos: int) -> int:
        """Number of ones strictly before ``pos``."""
        if not 0 <= pos <= self._len:
            raise RangeError(f"rank position {pos} outside [0, {self._len}]")
        idx = self._idx()
        s = pos >> SUPER_SHIFT
        r = idx.rank_super[s]
        words = self._words
        end = pos >> 6
        for wi in range(s << 3, end):
            r += words[wi].bit_count()
        if pos & 63:
            r += (words[end] & ((1 << (pos & 63)) - 1)).bit_count()
        return r

    def rank0(self, pos: int) -> int:
        return pos - self.rank1(pos)

    def select1(self, i: int) -> int:
        """Position of the i-th one (0-based)."""
        if not 0 <= i < self._ones:
            raise RangeError(f"select1({i}) with {self._ones} ones")
        idx = self._idx()
        rs = idx.rank_super
        j = i >> S_SHIFT
        lo = idx.samples1[j] >> SUPER_SHIFT
        if j + 1 < len(idx.samples1):
            hi = idx.samples1[j + 1] >> SUPER_SHIFT
        else:
            hi = len(rs) - 1
        s = bisect_right(rs, i, lo, hi + 1) - 1
        rem = i - rs[s]
        words = self._words
        wi = s << 3
        while True:
            word = words[wi]
            c = word.bit_count()
            if rem < c:
                return (wi << 6) + select_in_word(word, rem)
            rem -= c
            wi += 1

    def select0(self, i: int) -> int:
        """Position of the i-th zero (0-based)."""
        if not 0 <= i < self._len - self._ones:
            raise RangeError(f"select0({i}) with {self._len - self._ones} zeros")
        idx = self._idx()
        rs = idx.rank_super
        j = i >> S_SHIFT
        lo = idx.samples0[j] >> SUPER_SHIFT
        if j + 1 < len(idx.samples0):
            hi = idx.samples0[j + 1] >> SUPER_SHIFT
        else:
            hi = len(rs) - 1
        # largest superblock s in [lo, hi] with zeros-before(s) <= i
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if (mid << SUPER_SHIFT) - rs[mid] <= i:
                lo = mid
            else:
                hi = mid - 1
        rem = i - ((lo << SUPER_SHIFT) - rs[lo])
        words = self._words
        wi = lo << 3
        while True:
            word = ~words[wi] & WORD_MASK
            c = word.bit_count()
            if rem < c:
                return (wi << 6) + select_in_word(word, rem)
            rem -= c
            wi += 1

    # ------------------------------------------------------------------ space
    def size_bits(self) -> int:
        return self._len

    def index_bits(self) -> int:
        return self._index.size_bits() if self._index is not None else 0

    # ---------------------------------------------------------- serialization
    def to_bytes(self) -> bytes:
        return _HEADER.pack(MAGIC, VERSION, self._len, self._ones) + self._words.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["BitVector", int]:
        """Parse an EFBV record at ``offset``; returns (vector, end offset)."""
        if len(data) - offset < _HEADER.size:
            raise FormatError("truncated EFBV header")
        magic, version, length, ones = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"unsupported EFBV version {version}")
        start = offset + _HEADER.size
        end = start + 8 * _nwords(length)
        if end > len(data):
            raise FormatError("truncated EFBV payload")
        words = array("Q")
        words.frombytes(bytes(data[start:end]))
        if sum(w.bit_count() for w in words) != ones:
            raise FormatError("EFBV ones count does not match payload")
        if length & 63 and words and words[-1] >> (length & 63):
            raise FormatError("EFBV has bits set past its length")
        return cls._from_words(words, length, ones), end
