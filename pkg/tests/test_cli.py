"""End-to-end CLI behaviour and exit codes."""

import json

import numpy as np
import pytest

from xamba.cli import main
from xamba.graph import OpGraph, OpKind
from xamba.models import build_model
from xamba.tensor import Tensor, load_tensor, save_tensor


def run(*argv):
    return main(list(argv))


def test_census_matches_targets(capsys):
    assert run("census", "--model", "mamba") == 0
    assert run("census", "--model", "mamba2") == 0
    out = capsys.readouterr().out
    assert "MISMATCH" not in out
    assert "CumSum shapes" in out


def test_simulate_summary_and_report(tmp_path, capsys):
    report = tmp_path / "r.json"
    csv = tmp_path / "r.csv"
    code = run(
        "simulate", "--model", "mamba2", "--passes", "cumba",
        "--out", str(report), "--csv", str(csv),
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "speedup" in out
    doc = json.loads(report.read_text())
    assert doc["total_us"] > 0 and doc["passes"] == ["cumba"]
    assert abs(sum(doc["breakdown"].values()) - 1.0) < 1e-9
    lines = csv.read_text().strip().splitlines()
    assert lines[0].startswith("node_id,") and len(lines) > 10


def test_simulate_json_mode(capsys):
    assert run("simulate", "--model", "mamba", "--mode", "decode", "--passes", "actiba", "--json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert "tokens_per_second" in doc and "speedup" in doc


def test_simulate_baseline_has_no_speedup_and_cumsum_majority(capsys):
    assert run("simulate", "--model", "mamba2", "--json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert "speedup" not in doc


def test_verify_pass_and_fail(tmp_path, capsys):
    assert run("verify", "--model", "mamba2", "--passes", "cumba,reduba", "--atol", "1e-4") == 0
    # a deliberately coarse table must fail verification
    tables = tmp_path / "tables"
    tables.mkdir()
    assert run(
        "fit-plu", "--func", "silu", "--segments", "2",
        "--out", str(tables / "silu.clut"),
    ) == 0
    assert run(
        "fit-plu", "--func", "softplus", "--segments", "2",
        "--out", str(tables / "softplus.clut"),
    ) == 0
    code = run(
        "verify", "--model", "mamba", "--passes", "actiba",
        "--tables", str(tables), "--atol", "1e-4",
    )
    assert code == 3
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" in out


def test_verify_identity(capsys):
    assert run("verify", "--model", "mamba", "--passes", "") == 0


def test_bench_shape_and_determinism(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run("bench", "--out", str(a)) == 0
    assert run("bench", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().strip().splitlines()
    assert len(lines) == 11  # header + 2 models x 5 pass sets
    header = lines[0].split(",")
    share_cols = [i for i, h in enumerate(header) if h.startswith("share_")]
    for row in lines[1:]:
        cells = row.split(",")
        shares = sum(float(cells[i]) for i in share_cols)
        assert shares == pytest.approx(1.0, abs=1e-9)


def test_rewrite_roundtrip(tmp_path, capsys):
    g = build_model("mamba2")
    src = tmp_path / "g.json"
    dst = tmp_path / "g2.json"
    g.save(src)
    assert run("rewrite", "--in", str(src), "--passes", "cumba,reduba", "--out", str(dst)) == 0
    out = OpGraph.load(dst)
    census = out.census()
    assert census.get(OpKind.CUMSUM, 0) == 0
    assert census.get(OpKind.REDUCESUM, 0) == 0


def test_plu_error_command(tmp_path, capsys):
    path = tmp_path / "s.clut"
    assert run("fit-plu", "--func", "softplus", "--segments", "64", "--out", str(path)) == 0
    assert run("plu-error", "--table", str(path), "--grid", "100000") == 0
    out = capsys.readouterr().out
    assert "max err" in out


def test_run_command(tmp_path, capsys):
    g = OpGraph("double")
    x = g.input((2, 2))
    two = g.const(Tensor(np.full((1, 1), 2.0, dtype=np.float32)))
    g.mark_output(g.add_node(OpKind.MULTIPLY, [x, two]))
    gpath = tmp_path / "g.json"
    g.save(gpath)
    xpath = tmp_path / "x.xten"
    save_tensor(xpath, Tensor(np.ones((2, 2), dtype=np.float32)))
    prefix = str(tmp_path / "out_")
    assert run("run", "--graph", str(gpath), "--inputs", str(xpath), "--out-prefix", prefix) == 0
    out = load_tensor(prefix + "0.xten")
    assert out.array.tolist() == [[2.0, 2.0], [2.0, 2.0]]


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        run("simulate")  # missing --model
    assert e.value.code == 2


def test_numeric_error_exit_code(tmp_path, capsys):
    g = OpGraph("overflow")
    x = g.input((1, 1))
    g.mark_output(g.add_node(OpKind.EXP, [x]))
    g.metadata["strict_finite"] = True
    gpath = tmp_path / "g.json"
    g.save(gpath)
    xpath = tmp_path / "x.xten"
    save_tensor(xpath, Tensor(np.full((1, 1), 500.0, dtype=np.float32)))
    assert run("run", "--graph", str(gpath), "--inputs", str(xpath), "--out-prefix", str(tmp_path / "o")) == 4


def test_file_error_exit_code(capsys):
    assert run("plu-error", "--table", "/nonexistent/t.clut") == 1
