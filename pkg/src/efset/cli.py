"""Command-line harness: build, query, verify, space, bench.

Exit codes: 0 ok, 1 divergence from the oracle, 2 invalid input, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from bisect import bisect_left
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from sortedcontainers import SortedList

from .append_only import AppendOnlySet
from .dynset import DynSet
from .ef_static import EliasFano, SampledPredecessor, b_bits, ef_bits
from .errors import EfsetError, FormatError, OrderingError
from .workload import (ACCESS, DELETE, DELETE_RANK, DISTRIBUTIONS, INSERT, OP_NAMES, PRED,
                       Workload, parse_mix, universe_for)

EXIT_OK, EXIT_DIVERGENCE, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3
STRUCTURES = ("ef", "sampled", "dynset", "append")
EXHAUSTIVE_LIMIT = 1 << 12

CSV_COLUMNS = {
    "structure": "structure id (ef, sampled, dynset, append)",
    "n": "number of stored elements",
    "m": "universe bound; values lie in [0, m]",
    "op": "operation class timed, or 'space' for space-only rows",
    "count": "operations timed",
    "total_ns": "wall time of the timed operations in nanoseconds",
    "ns_per_op": "total_ns / count",
    "measured_bits": "every bit the structure holds, summed over its components",
    "ef_bits": "EF(n, m), recomputed from (n, m)",
    "b_bits": "ceil(log2 C(m+1, n)), recomputed from (n, m)",
    "redundancy_per_n": "(measured_bits - ef_bits) / n",
    "rebuilds": "low-width and class rebuilds triggered by the timed operations (dynset)",
}


@dataclass
class BenchRecord:
    structure: str
    n: int
    m: int
    op: str
    count: int
    total_ns: int
    ns_per_op: float
    measured_bits: int
    ef_bits: int
    b_bits: int
    redundancy_per_n: float
    rebuilds: int = 0

    @classmethod
    def make(cls, structure: str, n: int, m: int, op: str, count: int, total_ns: int,
             measured_bits: int, rebuilds: int = 0) -> "BenchRecord":
        e = ef_bits(n, m) if n else 0
        return cls(structure, n, m, op, count, total_ns,
                   total_ns / count if count else 0.0, measured_bits, e,
                   b_bits(n, m) if n else 0, (measured_bits - e) / n if n else 0.0, rebuilds)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------- input
def read_values(path: str, fmt: str) -> list[int]:
    try:
        if fmt == "binary":
            with open(path, "rb") as fh:
                raw = fh.read()
            if len(raw) % 8:
                raise CliError(EXIT_INVALID, f"{path}: length {len(raw)} is not a multiple of 8")
            return np.frombuffer(raw, dtype="<u8").tolist()
        out = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                s = line.strip()
                if not s:
                    continue
                try:
                    v = int(s)
                except ValueError:
                    raise CliError(EXIT_INVALID, f"line {lineno}: not an integer: {s!r}") from None
                if v < 0:
                    raise CliError(EXIT_INVALID, f"line {lineno}: negative value {v}")
                out.append(v)
        return out
    except OSError as e:
        raise CliError(EXIT_IO, str(e)) from None


def _check_increasing(values: list[int], what: str) -> None:
    for i in range(1, len(values)):
        if values[i] <= values[i - 1]:
            raise CliError(EXIT_INVALID, f"line {i + 1}: input not strictly increasing ({what})")


def build_structure(structure: str, values: list[int], m: int, block: int = 64, k: int = 256):
    if structure == "ef":
        _check_increasing(values, "ef")
        return EliasFano.encode(values, m, strict=True)
    if structure == "sampled":
        _check_increasing(values, "sampled")
        return SampledPredecessor.build(values, m, block)
    if structure == "dynset":
        return DynSet(m, values)
    if structure == "append":
        _check_increasing(values, "append")
        s = AppendOnlySet(k=k, m=m)
        s.extend(values)
        return s
    raise CliError(EXIT_INVALID, f"unknown structure {structure!r}")


def serialize(structure: str, obj) -> bytes:
    if structure == "sampled":
        return obj.ef.to_bytes()
    return obj.to_bytes()


def deserialize(structure: str, data: bytes, block: int = 64):
    if structure == "ef":
        return EliasFano.from_bytes(data)[0]
    if structure == "sampled":
        ef = EliasFano.from_bytes(data)[0]
        return SampledPredecessor.build(ef.decode(), ef.m, block)
    if structure == "dynset":
        return DynSet.from_bytes(data)[0]
    if structure == "append":
        return AppendOnlySet.from_bytes(data)[0]
    raise CliError(EXIT_INVALID, f"unknown structure {structure!r}")


def payload_bits(obj) -> int:
    """Elias-Fano high + low bits, without indexes or bookkeeping."""
    if isinstance(obj, EliasFano):
        return obj.payload_bits
    if isinstance(obj, SampledPredecessor):
        return obj.ef.payload_bits
    return obj.payload_bits()


def measured_bits(obj) -> int:
    return obj.space_report().measured_bits


# ------------------------------------------------------------------- verify
def _exhaustive_pred(obj, ref: list[int], m: int) -> str | None:
    for x in range(m + 2):
        j = bisect_left(ref, x)
        want = ref[j - 1] if j else None
        got = obj.predecessor(x)
        if got != want:
            return f"exhaustive predecessor({x}): got {got}, expected {want}"
    return None


def verify(structure: str, w: Workload, factory: Callable | None = None) -> tuple[int, str]:
    """Run w's tape against the structure and an oracle; (exit code, message)."""
    tape = w.tape()
    if structure == "append":
        return _verify_append(w, tape, factory)
    init = w.initial_values()
    if structure in ("ef", "sampled"):
        if any(c in (INSERT, DELETE, DELETE_RANK) for c, _ in tape):
            return EXIT_INVALID, f"{structure} is static; the tape contains updates (use mix 0:0:a:p)"
        obj = factory(init, w.m) if factory else build_structure(structure, init.tolist(), w.m)
        ref = init.tolist()
        for k, (code, arg) in enumerate(tape):
            if code == ACCESS:
                i = arg % len(ref)
                got, want = obj.access(i), ref[i]
            else:
                j = bisect_left(ref, arg)
                got, want = obj.predecessor(arg), (ref[j - 1] if j else None)
            if got != want:
                return EXIT_DIVERGENCE, (f"divergence at op {k} (seed {w.seed}): {OP_NAMES[code]}"
                                         f"({arg}) got {got}, expected {want}")
        if w.m <= EXHAUSTIVE_LIMIT:
            msg = _exhaustive_pred(obj, ref, w.m)
            if msg:
                return EXIT_DIVERGENCE, f"{msg} (seed {w.seed})"
        return EXIT_OK, f"{len(tape)} ops, no divergence"
    if structure != "dynset":
        return EXIT_INVALID, f"unknown structure {structure!r}"
    obj = factory(init, w.m) if factory else DynSet(w.m, init)
    ref = SortedList(init.tolist())
    for k, (code, arg) in enumerate(tape):
        if code == INSERT:
            want = arg not in ref
            got = obj.insert(arg)
            if want:
                ref.add(arg)
        elif code in (DELETE, DELETE_RANK):
            if code == DELETE_RANK:
                if not ref:
                    continue
                arg = ref[arg % len(ref)]
            want = arg in ref
            got = obj.delete(arg)
            if want:
                ref.remove(arg)
        elif code == ACCESS:
            if not ref:
                continue
            i = arg % len(ref)
            got, want = obj.access(i), ref[i]
            arg = i
        else:
            j = ref.bisect_left(arg)
            got, want = obj.predecessor(arg), (ref[j - 1] if j else None)
        if got != want or len(obj) != len(ref):
            return EXIT_DIVERGENCE, (f"divergence at op {k} (seed {w.seed}): {OP_NAMES[code]}"
                                     f"({arg}) got {got}, expected {want}")
    if w.m <= EXHAUSTIVE_LIMIT:
        msg = _exhaustive_pred(obj, list(ref), w.m)
        if msg:
            return EXIT_DIVERGENCE, f"{msg} (seed {w.seed})"
    return EXIT_OK, f"{len(tape)} ops, no divergence"


def _verify_append(w: Workload, tape, factory) -> tuple[int, str]:
    if w.mix[1]:
        return EXIT_INVALID, "append-only tapes cannot contain deletes"
    appends = sum(1 for c, _ in tape if c == INSERT)
    values = w.monotone_values(max(1, appends + w.n)).tolist()
    m = max(w.m, values[-1])
    obj = factory(m) if factory else AppendOnlySet(m=m)
    ref: list[int] = []
    it = iter(values)
    for _ in range(w.n):
        obj.append(next(it))
    ref.extend(values[:w.n])
    for k, (code, arg) in enumerate(tape):
        if code == INSERT:
            x = next(it)
            obj.append(x)
            ref.append(x)
            continue
        if not ref:
            continue
        if code == ACCESS:
            i = arg % len(ref)
            got, want = obj.access(i), ref[i]
        else:
            x = arg % (ref[-1] + 2)
            j = bisect_left(ref, x)
            got, want = obj.predecessor(x), (ref[j - 1] if j else None)
        if got != want:
            return EXIT_DIVERGENCE, (f"divergence at op {k} (seed {w.seed}): {OP_NAMES[code]}"
                                     f"({arg}) got {got}, expected {want}")
    if obj.values() != ref:
        return EXIT_DIVERGENCE, f"full scan differs from the append history (seed {w.seed})"
    if ref and ref[-1] <= EXHAUSTIVE_LIMIT:
        msg = _exhaustive_pred(obj, ref, ref[-1])
        if msg:
            return EXIT_DIVERGENCE, f"{msg} (seed {w.seed})"
    return EXIT_OK, f"{len(tape)} ops, no divergence"


def verify_append_tape(values: list[int], k: int = 256) -> tuple[int, str]:
    """Replay an explicit append tape; a non-monotone tape is invalid input."""
    s = AppendOnlySet(k=k, m=max(values, default=0))
    try:
        s.extend(values)
    except OrderingError as e:
        return EXIT_INVALID, f"tape invalid for append-only structure: {e} (op {e.index})"
    if s.values() != list(values):
        return EXIT_DIVERGENCE, "full scan differs from the append tape"
    return EXIT_OK, f"{len(values)} appends replayed"


# -------------------------------------------------------------------- space
def space_records(structure: str, sizes: list[int], gamma: float, seed: int,
                  distribution: str = "uniform", block: int = 64) -> list[BenchRecord]:
    out = []
    for n in sizes:
        m = universe_for(n, gamma)
        w = Workload(seed, n, m, distribution)
        if structure == "append":
            vals = w.monotone_values().tolist()
            m = max(m, vals[-1])
            obj = AppendOnlySet(m=m)
            obj.extend(vals)
        elif structure == "dynset":
            obj = DynSet.from_sorted(w.initial_values(), m)
        else:
            obj = build_structure(structure, w.initial_values().tolist(), m, block)
        rep = obj.space_report()
        out.append(BenchRecord.make(structure, n, m, "space", 0, 0, rep.measured_bits))
    return out


# -------------------------------------------------------------------- bench
def _time(fn, args) -> int:
    t = time.perf_counter_ns()
    for a in args:
        fn(a)
    return time.perf_counter_ns() - t


def bench_records(structure: str, w: Workload, count: int, repetitions: int = 3,
                  block: int = 64) -> list[BenchRecord]:
    rng = np.random.default_rng(w.seed)
    out = []
    if structure == "append":
        for n in sorted({max(1, w.n // 100), max(1, w.n // 10), w.n}):
            vals = Workload(w.seed, n, w.m, w.distribution).monotone_values().tolist()
            best = None
            for _ in range(repetitions):
                s = AppendOnlySet(m=max(w.m, vals[-1]))
                t = _time(s.append, vals)
                best = t if best is None else min(best, t)
            out.append(BenchRecord.make("append", n, max(w.m, vals[-1]), "append", n, best,
                                        measured_bits(s)))
        return out
    init = w.initial_values()
    obj = (DynSet.from_sorted(init, w.m) if structure == "dynset"
           else build_structure(structure, init.tolist(), w.m, block))
    n = len(obj)
    bits = measured_bits(obj)
    ranks = rng.integers(0, n, size=count).tolist()
    probes = rng.integers(0, w.m + 1, size=count, endpoint=True).tolist()
    classes = [("access", obj.access, ranks), ("predecessor", obj.predecessor, probes)]
    for name, fn, args in classes:
        _time(fn, args[: max(1, count // 10)])  # warm-up
        best = min(_time(fn, args) for _ in range(repetitions))
        out.append(BenchRecord.make(structure, n, w.m, name, count, best, bits))
    if structure == "dynset":
        ins = rng.integers(0, w.m + 1, size=count, endpoint=True).tolist()
        for name, fn in (("insert", obj.insert), ("delete", obj.delete)):
            r = obj.rebuild_events
            t = _time(fn, ins)
            out.append(BenchRecord.make(structure, len(obj), w.m, name, count, t,
                                        measured_bits(obj), obj.rebuild_events - r))
    return out


def emit(records: list[BenchRecord], as_json: bool, out: str | None) -> None:
    if as_json:
        text = json.dumps([asdict(r) for r in records], indent=None) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
        wr.writeheader()
        for r in records:
            wr.writerow(asdict(r))
        text = buf.getvalue()
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as e:
            raise CliError(EXIT_IO, str(e)) from None
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------- main
def _parser() -> argparse.ArgumentParser:
    columns = "\n".join(f"  {k:<18} {v}" for k, v in CSV_COLUMNS.items())
    p = argparse.ArgumentParser(
        prog="efset", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Elias-Fano ordered sets: build, query, verify, space, bench.",
        epilog=f"CSV/JSON report columns (space, bench):\n{columns}\n\n"
               "Exit codes: 0 ok, 1 divergence, 2 invalid input, 3 I/O error.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, structures=STRUCTURES):
        sp.add_argument("--structure", choices=structures, default="dynset")
        sp.add_argument("--json", action="store_true", help="emit JSON instead of CSV/text")

    def wl(sp):
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--n", type=int, default=10_000)
        sp.add_argument("--gamma", type=float, default=2.0, help="universe m = n^gamma")
        sp.add_argument("--m", type=int, help="explicit universe bound (overrides --gamma)")
        sp.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform")
        sp.add_argument("--mix", default="40:10:25:25", help="insert:delete:access:predecessor")
        sp.add_argument("--ops", type=int, default=100_000)

    b = sub.add_parser("build", help="build a structure from a file and serialize it")
    common(b)
    b.add_argument("--input", required=True)
    b.add_argument("--format", choices=("text", "binary"), default="text")
    b.add_argument("--out", required=True)
    b.add_argument("--m", type=int, help="universe bound (default: largest input value)")
    b.add_argument("--block", type=int, default=64, help="sample spacing for 'sampled'")
    b.add_argument("--k", type=int, default=256, help="buffer size for 'append'")

    q = sub.add_parser("query", help="run access/predecessor against a serialized structure")
    common(q)
    q.add_argument("--input", required=True, help="serialized structure")
    q.add_argument("op", choices=("access", "predecessor"))
    q.add_argument("args", nargs="+", type=int)

    v = sub.add_parser("verify", help="differential test against an oracle")
    common(v, ("ef", "sampled", "dynset", "append"))
    wl(v)
    v.add_argument("--tape", help="explicit append tape (text, one value per line)")

    s = sub.add_parser("space", help="space report for several sizes")
    common(s)
    s.add_argument("--sizes", default="65536,1048576", help="comma separated n values")
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform")
    s.add_argument("--out")

    be = sub.add_parser("bench", help="timed runs per operation class")
    common(be)
    wl(be)
    be.add_argument("--count", type=int, default=10_000, help="operations per class")
    be.add_argument("--repetitions", type=int, default=3)
    be.add_argument("--out")
    return p


def _workload(a) -> Workload:
    m = a.m if a.m is not None else universe_for(a.n, a.gamma)
    try:
        return Workload(a.seed, a.n, m, a.distribution, parse_mix(a.mix), a.ops)
    except ValueError as e:
        raise CliError(EXIT_INVALID, str(e)) from None


def run(argv: list[str] | None = None) -> int:
    a = _parser().parse_args(argv)
    if a.cmd == "build":
        values = read_values(a.input, a.format)
        if not values:
            raise CliError(EXIT_INVALID, "empty input (n >= 1 required)")
        m = a.m if a.m is not None else max(values)
        if max(values) > m:
            raise CliError(EXIT_INVALID, f"value {max(values)} exceeds --m {m}")
        try:
            obj = build_structure(a.structure, values, m, a.block, a.k)
        except OrderingError as e:
            line = (e.index or 0) + 1
            raise CliError(EXIT_INVALID, f"line {line}: {e}") from None
        except (EfsetError, ValueError) as e:
            raise CliError(EXIT_INVALID, str(e)) from None
        data = serialize(a.structure, obj)
        try:
            with open(a.out, "wb") as fh:
                fh.write(data)
        except OSError as e:
            raise CliError(EXIT_IO, str(e)) from None
        rep = obj.space_report()
        summary = {"structure": a.structure, "n": len(obj), "m": m,
                   "payload_bits": payload_bits(obj),
                   "bits": rep.measured_bits, "ef_bits": ef_bits(len(obj), m),
                   "bytes": len(data)}
        if a.structure == "ef":
            summary["ell"] = obj.ell
        print(json.dumps(summary))
        return EXIT_OK
    if a.cmd == "query":
        try:
            with open(a.input, "rb") as fh:
                data = fh.read()
        except OSError as e:
            raise CliError(EXIT_IO, str(e)) from None
        try:
            obj = deserialize(a.structure, data)
        except FormatError as e:
            raise CliError(EXIT_INVALID, str(e)) from None
        res = []
        for x in a.args:
            try:
                res.append(obj.access(x) if a.op == "access" else obj.predecessor(x))
            except IndexError as e:
                raise CliError(EXIT_INVALID, str(e)) from None
        if a.json:
            print(json.dumps({"op": a.op, "args": a.args, "results": res}))
        else:
            for r in res:
                print("none" if r is None else r)
        return EXIT_OK
    if a.cmd == "verify":
        if a.tape:
            code, msg = verify_append_tape(read_values(a.tape, "text"))
        else:
            code, msg = verify(a.structure, _workload(a))
        if a.json:
            print(json.dumps({"structure": a.structure, "seed": a.seed, "status": code, "message": msg}))
        else:
            print(msg, file=sys.stderr if code else sys.stdout)
        return code
    if a.cmd == "space":
        try:
            sizes = [int(s) for s in a.sizes.split(",") if s]
        except ValueError:
            raise CliError(EXIT_INVALID, f"bad --sizes {a.sizes!r}") from None
        emit(space_records(a.structure, sizes, a.gamma, a.seed, a.distribution), a.json, a.out)
        return EXIT_OK
    if a.cmd == "bench":
        emit(bench_records(a.structure, _workload(a), a.count, a.repetitions), a.json, a.out)
        return EXIT_OK
    return EXIT_INVALID


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except CliError as e:
        print(f"efset: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
