import json

import numpy as np
import pytest

from efset import DynSet
from efset.cli import (CSV_COLUMNS, EXIT_DIVERGENCE, EXIT_INVALID, EXIT_IO, EXIT_OK, BenchRecord, main,
                       space_records, verify)
from efset.ef_static import b_bits, ef_bits
from efset.workload import Workload, parse_mix

from conftest import SAMPLE


@pytest.fixture
def sample_file(tmp_path):
    p = tmp_path / "t1.txt"
    p.write_text("\n".join(map(str, SAMPLE)) + "\n")
    return p


def test_build_sample(sample_file, tmp_path, capsys):
    out = tmp_path / "t1.efst"
    assert main(["build", "--structure", "ef", "--input", str(sample_file), "--m", "63",
                 "--out", str(out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["n"] == 12 and summary["ell"] == 3 and summary["payload_bits"] == 56
    assert main(["query", "--structure", "ef", "--input", str(out), "access", "8"]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["36"]
    assert main(["query", "--structure", "ef", "--input", str(out), "predecessor", "30", "3"]) == 0
    assert capsys.readouterr().out.split() == ["25", "none"]


@pytest.mark.parametrize("structure", ["ef", "sampled", "dynset", "append"])
def test_build_query_binary(structure, tmp_path, capsys):
    rng = np.random.default_rng(0)
    v = np.unique(rng.integers(0, 1 << 40, size=5000))
    src = tmp_path / "v.bin"
    src.write_bytes(v.astype("<u8").tobytes())
    out = tmp_path / "v.out"
    assert main(["build", "--structure", structure, "--input", str(src), "--format", "binary",
                 "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    idx = [0, 17, 4999]
    assert main(["query", "--structure", structure, "--input", str(out), "--json", "access",
                 *map(str, idx)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["results"] == [int(v[i]) for i in idx]


def test_empty_input(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("")
    assert main(["build", "--structure", "ef", "--input", str(p), "--out", str(tmp_path / "x")]) \
        == EXIT_INVALID


def test_unsorted_reports_line(tmp_path, capsys):
    p = tmp_path / "u.txt"
    p.write_text("1\n5\n4\n")
    assert main(["build", "--structure", "ef", "--input", str(p), "--out", str(tmp_path / "x")]) \
        == EXIT_INVALID
    assert "line 3" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["build", "--input", str(tmp_path / "nope"), "--out", str(tmp_path / "x")]) \
        == EXIT_IO


def test_verify_dynset():
    code, msg = verify("dynset", Workload(1, 10_000, 10 ** 8, mix=(40, 10, 25, 25), ops=30_000))
    assert code == EXIT_OK, msg


def test_verify_small_universe_exhaustive():
    w = Workload(2, 300, 4000, "clustered", (40, 10, 25, 25), 5000)
    assert verify("dynset", w)[0] == EXIT_OK
    assert verify("append", Workload(2, 300, 4000, mix=(50, 0, 25, 25), ops=2000))[0] == EXIT_OK
    assert verify("ef", Workload(2, 300, 4000, mix=(0, 0, 50, 50), ops=2000))[0] == EXIT_OK


class Corrupted(DynSet):
    def predecessor(self, x):
        r = super().predecessor(x)
        return None if r is not None and r % 7 == 0 else r


def test_verify_detects_corruption():
    w = Workload(3, 2000, 10 ** 6, ops=5000)
    code, msg = verify("dynset", w, factory=lambda init, m: Corrupted(m, init))
    assert code == EXIT_DIVERGENCE
    assert "op " in msg and "seed 3" in msg


def test_verify_append_rejects_non_monotone(tmp_path):
    p = tmp_path / "tape.txt"
    p.write_text("1\n2\n9\n5\n")
    assert main(["verify", "--structure", "append", "--tape", str(p)]) == EXIT_INVALID
    assert main(["verify", "--structure", "append", "--mix", "40:10:25:25"]) == EXIT_INVALID


def test_workload_determinism():
    a = Workload(99, 1000, 10 ** 6, "zipf-gap", (30, 20, 25, 25), 3000)
    b = Workload(99, 1000, 10 ** 6, "zipf-gap", (30, 20, 25, 25), 3000)
    assert a.tape_bytes() == b.tape_bytes()
    assert np.array_equal(a.initial_values(), b.initial_values())
    assert a.tape_bytes() != Workload(98, 1000, 10 ** 6, "zipf-gap", (30, 20, 25, 25), 3000).tape_bytes()
    for dist in ("uniform", "clustered", "zipf-gap"):
        v = Workload(5, 500, 10 ** 5, dist).initial_values()
        assert v.size == 500 and np.all(np.diff(v) > 0) and v[-1] <= 10 ** 5


def test_parse_mix():
    assert parse_mix("40:10:25:25") == (40, 10, 25, 25)
    with pytest.raises(ValueError):
        parse_mix("50:50:50:0")


def test_space_ef_sample_size():
    rec = space_records("ef", [12], 1.67, seed=1)[0]
    assert rec.m == 63 and rec.ef_bits == 56


def test_space_rows_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert main(["space", "--structure", "dynset", "--sizes", "1000,4000", "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()
    rows = a.read_text().splitlines()
    assert rows[0].split(",") == list(CSV_COLUMNS)


@pytest.mark.parametrize("structure", ["ef", "sampled", "dynset", "append"])
def test_b_bits_floor(structure):
    for rec in space_records(structure, [500, 3000], 2.0, seed=4):
        assert rec.b_bits == b_bits(rec.n, rec.m) <= rec.measured_bits
        assert rec.ef_bits == ef_bits(rec.n, rec.m)


def test_bench_json(capsys):
    assert main(["bench", "--structure", "ef", "--n", "3000", "--count", "200",
                 "--repetitions", "1", "--json"]) == EXIT_OK
    recs = json.loads(capsys.readouterr().out)
    assert {r["op"] for r in recs} == {"access", "predecessor"}
    assert set(recs[0]) == set(BenchRecord.__dataclass_fields__)


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    text = capsys.readouterr().out
    for col in BenchRecord.__dataclass_fields__:
        assert col in text


def test_bench_dynset_reports_rebuilds(capsys):
    assert main(["bench", "--structure", "dynset", "--n", "2000", "--count", "3000",
                 "--repetitions", "1", "--json"]) == EXIT_OK
    recs = {r["op"]: r for r in json.loads(capsys.readouterr().out)}
    assert recs["access"]["rebuilds"] == 0
    assert recs["insert"]["rebuilds"] > 0
