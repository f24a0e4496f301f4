"""Seeded workloads: an initial value set plus an operation tape.

The same ``Workload`` always yields byte-identical tapes.  Operations that
need the current contents (access by rank, delete of a present element) carry
a 64-bit selector that the runner reduces modulo the current size.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

INSERT, DELETE, DELETE_RANK, ACCESS, PRED = range(5)
OP_NAMES = {INSERT: "insert", DELETE: "delete", DELETE_RANK: "delete",
            ACCESS: "access", PRED: "predecessor"}
DISTRIBUTIONS = ("uniform", "clustered", "zipf-gap")
_REC = struct.Struct("<BQ")
RUN_LEN = 16


def parse_mix(text: str) -> tuple[int, int, int, int]:
    """'40:10:25:25' -> (40, 10, 25, 25); the four parts must sum to 100."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"mix {text!r} needs four fields i:d:a:p")
    mix = tuple(int(p) for p in parts)
    if any(p < 0 for p in mix) or sum(mix) != 100:
        raise ValueError(f"mix {text!r} must be non-negative and sum to 100")
    return mix  # type: ignore[return-value]


def universe_for(n: int, gamma: float) -> int:
    return min((1 << 62), max(n, int(round(max(2, n) ** gamma))))


@dataclass(frozen=True)
class Workload:
    seed: int
    n: int
    m: int
    distribution: str = "uniform"
    mix: tuple[int, int, int, int] = (40, 10, 25, 25)
    ops: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if sum(self.mix) != 100 or any(p < 0 for p in self.mix):
            raise ValueError("op mix must be non-negative and sum to 100")
        if self.n > self.m + 1:
            raise ValueError(f"cannot draw {self.n} distinct values from [0, {self.m}]")

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64([self.seed & ((1 << 64) - 1), stream]))

    # ------------------------------------------------------------------ values
    def _draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        m = self.m
        if self.distribution == "uniform":
            return rng.integers(0, m, size=count, endpoint=True, dtype=np.int64)
        if self.distribution == "clustered":
            runs = -(-count // RUN_LEN)
            starts = rng.integers(0, max(0, m - RUN_LEN), size=runs, endpoint=True, dtype=np.int64)
            v = (starts[:, None] + np.arange(RUN_LEN, dtype=np.int64)).ravel()[:count]
            return np.minimum(v, m)
        # zipf-gap: heavy-tailed gaps scaled so the sequence spans the universe
        gaps = rng.zipf(1.5, size=count).astype(np.float64)
        gaps = np.minimum(gaps, 1e12)
        pos = np.cumsum(gaps)
        offset = rng.integers(0, m, endpoint=True)
        return ((pos / pos[-1] * m).astype(np.int64) + offset) % (m + 1)

    def initial_values(self) -> np.ndarray:
        """n distinct values in [0, m], sorted."""
        rng = self._rng(0)
        out = np.unique(self._draw(rng, self.n))
        while out.size < self.n:
            extra = self._draw(rng, 2 * (self.n - out.size) + 16)
            out = np.unique(np.concatenate([out, extra]))
        if out.size > self.n:
            keep = np.sort(rng.choice(out.size, self.n, replace=False))
            out = out[keep]
        return out

    def monotone_values(self, count: int | None = None) -> np.ndarray:
        """Strictly increasing values for append-only workloads."""
        count = self.n if count is None else count
        rng = self._rng(2)
        mean_gap = max(1, self.m // max(1, count) - 1)
        if self.distribution == "clustered":
            gaps = np.where(rng.random(count) < 1 / RUN_LEN,
                            rng.integers(1, 2 * RUN_LEN * mean_gap, size=count, endpoint=True), 1)
        elif self.distribution == "zipf-gap":
            gaps = np.minimum(rng.zipf(1.5, size=count), 2 * mean_gap)
        else:
            gaps = rng.integers(1, 2 * mean_gap, size=count, endpoint=True)
        return np.cumsum(gaps.astype(np.int64)) - 1

    # -------------------------------------------------------------------- tape
    def tape(self) -> list[tuple[int, int]]:
        rng = self._rng(1)
        ops = self.ops
        i, d, a, _ = self.mix
        kinds = rng.integers(0, 100, size=ops)
        vals = self._draw(rng, ops)
        sel = rng.integers(0, 1 << 63, size=ops, dtype=np.int64)
        by_rank = rng.random(ops) < 0.8
        probe = rng.integers(0, self.m + 1, size=ops, endpoint=True, dtype=np.int64)
        codes = np.full(ops, PRED, dtype=np.int64)
        codes[kinds < i + d + a] = ACCESS
        codes[kinds < i + d] = np.where(by_rank, DELETE_RANK, DELETE)[kinds < i + d]
        codes[kinds < i] = INSERT
        args = np.where(codes == INSERT, vals,
                        np.where((codes == ACCESS) | (codes == DELETE_RANK), sel, probe))
        return list(zip(codes.tolist(), args.tolist()))

    def tape_bytes(self) -> bytes:
        return b"".join(_REC.pack(c, a) for c, a in self.tape())
