"""Command-line front end.

Subcommands:
  simulate   build a block, apply passes, and report modeled latency
  verify     numerically compare a rewritten block against its baseline
  bench      sweep models x pass-sets into a CSV
  rewrite    apply passes to a graph JSON file
  census     print a block's operator census next to its target counts
  fit-plu    fit a piecewise-linear activation table to a .clut file
  plu-error  report a table's worst error against the exact function
  run        execute a graph JSON on raw tensor files

Exit codes: 0 success, 2 usage error, 3 verification failure,
4 numeric error, 1 any other library error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NumericError, XambaError
from .graph import OpGraph, OpKind
from .models import CENSUS_TARGETS, build_model
from .npusim import cost_graph, load_calibration, speedup, tokens_per_second
from .passes import apply_passes, check_equivalence
from .plu import PLU_FUNCS, fit_uniform, load_table, max_error, save_table
from .tensor import load_tensor, save_tensor

PASS_SETS = [
    ("none", ""),
    ("cumba", "cumba"),
    ("reduba", "reduba"),
    ("cumba+reduba", "cumba,reduba"),
    ("all", "cumba,reduba,actiba"),
]


def _parse_passes(text: str) -> list:
    return [p.strip() for p in text.split(",") if p.strip()]


def _load_tables(table_dir):
    if table_dir is None:
        from .plu import default_tables

        return default_tables()
    tables = {}
    for func in PLU_FUNCS:
        path = Path(table_dir) / f"{func}.clut"
        if path.exists():
            tables[func] = load_table(path)
    return tables


def _build_pair(args):
    base = build_model(args.model, args.mode, args.seed)
    passes = _parse_passes(args.passes)
    tables = _load_tables(getattr(args, "tables", None))
    rewritten = apply_passes(base, passes, tables) if passes else base
    return base, rewritten, passes


def cmd_simulate(args) -> int:
    base, rewritten, passes = _build_pair(args)
    config = load_calibration(args.calibration)
    report = cost_graph(rewritten, config)
    summary = {
        "graph": report.graph,
        "passes": passes,
        "total_us": report.total_us,
        "config_hash": report.config_hash,
    }
    if passes:
        summary["speedup"] = speedup(cost_graph(base, config), report)
    if args.mode == "decode":
        summary["tokens_per_second"] = tokens_per_second(report)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    if args.csv:
        Path(args.csv).write_text("\n".join(report.csv_rows()) + "\n")
    if args.json:
        print(json.dumps(summary, indent=1))
    else:
        line = f"{report.graph} [{','.join(passes) or 'baseline'}] total {report.total_us:.3f} us"
        if "speedup" in summary:
            line += f", speedup {summary['speedup']:.3f}x"
        if "tokens_per_second" in summary:
            line += f", {summary['tokens_per_second']:.1f} tokens/s"
        print(line)
        shares = sorted(report.breakdown.items(), key=lambda kv: -kv[1])
        print("breakdown:", ", ".join(f"{k} {v * 100:.1f}%" for k, v in shares[:6]))
    return 0


def cmd_verify(args) -> int:
    base, rewritten, passes = _build_pair(args)
    if not passes:
        print("nothing to verify: no passes given")
        return 0
    report = check_equivalence(
        base,
        rewritten,
        n_samples=args.samples,
        rtol=args.rtol,
        atol=args.atol,
        seed=args.seed,
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    status = "PASS" if report.passed else "FAIL"
    print(
        f"{status}: {args.model} vs [{','.join(passes)}], max diff "
        f"{report.max_abs_diff:.3e} over {report.samples} samples (atol {args.atol})"
    )
    return 0 if report.passed else 3


def cmd_bench(args) -> int:
    config = load_calibration(args.calibration)
    tables = _load_tables(args.tables)
    kinds: list[str] = []
    rows = []
    for model in ("mamba", "mamba2"):
        base = build_model(model, "prefill", args.seed)
        base_report = cost_graph(base, config)
        for label, passes_text in PASS_SETS:
            passes = _parse_passes(passes_text)
            g = apply_passes(base, passes, tables) if passes else base
            report = cost_graph(g, config)
            for k in report.breakdown:
                if k not in kinds:
                    kinds.append(k)
            rows.append((model, label, report, speedup(base_report, report)))
    kinds = sorted(kinds)
    lines = ["model,passes,total_us," + "speedup," + ",".join(f"share_{k}" for k in kinds)]
    for model, label, report, sp in rows:
        shares = ",".join(f"{report.breakdown.get(k, 0.0):.12f}" for k in kinds)
        lines.append(f"{model},{label},{report.total_us:.6f},{sp:.6f},{shares}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_rewrite(args) -> int:
    g = OpGraph.load(args.infile)
    tables = _load_tables(args.tables)
    out = apply_passes(g, _parse_passes(args.passes), tables)
    out.save(args.out)
    print(f"wrote {args.out}: {len(out.nodes)} nodes")
    return 0


def cmd_census(args) -> int:
    g = build_model(args.model, "prefill", args.seed)
    counts = g.census()
    targets = CENSUS_TARGETS[args.model]
    print(f"{'kind':14s} {'count':>5s} {'target':>6s}")
    ok = True
    for kind in sorted(counts, key=lambda k: k.value):
        tgt = targets.get(kind)
        mark = ""
        if tgt is not None:
            mark = "ok" if counts[kind] == tgt else "MISMATCH"
            ok = ok and counts[kind] == tgt
        print(f"{kind.value:14s} {counts[kind]:5d} {'' if tgt is None else tgt:>6} {mark}")
    if args.model == "mamba2":
        shapes = g.shapes
        cs = sorted(
            tuple(shapes[n.id]) for n in g.nodes if n.kind is OpKind.CUMSUM
        )
        print("CumSum shapes:", cs)
    return 0 if ok else 1


def cmd_fit_plu(args) -> int:
    table = fit_uniform(args.func, args.beta, args.lo, args.hi, args.segments)
    save_table(args.out, table)
    err, arg = max_error(table, 100_000)
    print(f"wrote {args.out}: S={args.segments} [{args.lo}, {args.hi}], max err {err:.3e} at x={arg:.3f}")
    return 0


def cmd_plu_error(args) -> int:
    table = load_table(args.table)
    err, arg = max_error(table, args.grid)
    print(f"{table.func} S={table.segments}: max err {err:.6e} at x={arg:.4f} over {args.grid} points")
    return 0


def cmd_run(args) -> int:
    g = OpGraph.load(args.graph)
    feed = [load_tensor(p) for p in args.inputs]
    outs = g.execute(feed)
    for i, t in enumerate(outs):
        path = f"{args.out_prefix}{i}.xten"
        save_tensor(path, t)
        print(f"wrote {path} shape {list(t.shape)}")
    return 0


def _add_model_flags(p):
    p.add_argument("--model", choices=("mamba", "mamba2"), required=True)
    p.add_argument("--mode", choices=("prefill", "decode"), default="prefill")
    p.add_argument("--passes", default="", help="comma list: cumba,reduba,actiba[:kind]")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tables", default=None, help="directory with silu.clut/softplus.clut")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xamba", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="model latency of a (rewritten) block")
    _add_model_flags(p)
    p.add_argument("--calibration", default=None)
    p.add_argument("--out", default=None, help="write the full latency report JSON")
    p.add_argument("--csv", default=None, help="write per-node rows as CSV")
    p.add_argument("--json", action="store_true", help="print the summary as JSON")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("verify", help="check a rewrite against the baseline numerically")
    _add_model_flags(p)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--atol", type=float, default=1e-4)
    p.add_argument("--rtol", type=float, default=1e-5)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("bench", help="sweep both models over all pass sets")
    p.add_argument("--calibration", default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tables", default=None)
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("rewrite", help="apply passes to a graph JSON file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--passes", required=True)
    p.add_argument("--tables", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_rewrite)

    p = sub.add_parser("census", help="operator counts vs the published targets")
    p.add_argument("--model", choices=("mamba", "mamba2"), required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(handler=cmd_census)

    p = sub.add_parser("fit-plu", help="fit and save an activation table")
    p.add_argument("--func", choices=PLU_FUNCS, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--lo", type=float, default=-8.0)
    p.add_argument("--hi", type=float, default=8.0)
    p.add_argument("--segments", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_fit_plu)

    p = sub.add_parser("plu-error", help="max table error on a dense grid")
    p.add_argument("--table", required=True)
    p.add_argument("--grid", type=int, default=1_000_000)
    p.set_defaults(handler=cmd_plu_error)

    p = sub.add_parser("run", help="execute a graph JSON on .xten tensors")
    p.add_argument("--graph", required=True)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out-prefix", default="out_")
    p.set_defaults(handler=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 4
    except (XambaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
