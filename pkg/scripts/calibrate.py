"""Fit the cost-model calibration against the published speedup ratios.

Free parameters (8): dsp_freq_mhz, mpu_freq_mhz, dsp_lanes,
mpu_macs_per_cycle, sram_bw_bytes_per_cycle, mpu_utilization, and the
per-vector cycle counts for SiLU and Softplus.  Everything else is
fixed up front: dsp_regfile_bytes=16 (per-lane working set; drives the
chunked-SRAM-traffic factor of wide CumSum rows), bytes_per_elem=4,
exp/sigmoid vector costs, both feature flags on.

Targets (all ratios, each weighted by closeness):
  mamba2 prefill : cumba 1.8x, reduba 1.1x, cumba+reduba 2.3x
  mamba  prefill : softplus-PLU 1.2x, silu-PLU 1.8x, full 2.6x
  mamba  decode  : full 2.6x (the 100 -> 260 tokens/s ratio)
Constraints: baseline mamba2 CumSum share > 0.5; baseline mamba's two
largest shares are SiLU then Softplus; every rewrite strictly reduces
the rewritten graph's total.

The fit is a coordinate search over per-parameter grids, run to a fixed
point, then the frequency pair is scaled so the baseline mamba decode
lands near 100 tokens/s (pure rescaling; ratios are unchanged).  The
result is committed at src/xamba/calibration/lnl.json and reused,
unmodified, by every acceptance scenario.

Usage: python3 scripts/calibrate.py [--out PATH]
"""

import argparse
import itertools
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from xamba.models import build_model  # noqa: E402
from xamba.npusim import CostConfig, cost_graph, speedup, tokens_per_second  # noqa: E402
from xamba.passes import apply_actiba, apply_cumba, apply_reduba  # noqa: E402
from xamba.plu import default_tables  # noqa: E402

SEED = 42

TARGETS = {
    "m2_cumba": 1.8,
    "m2_reduba": 1.1,
    "m2_both": 2.3,
    "m1_softplus": 1.2,
    "m1_silu": 1.8,
    "m1_full": 2.6,
    "m1_decode_full": 2.6,
}

GRIDS = {
    "dsp_lanes": [8, 16, 32, 64, 128],
    "mpu_macs_per_cycle": [512, 1024, 2048, 4096, 8192],
    "sram_bw_bytes_per_cycle": [128, 192, 256, 384, 512, 768, 1024],
    "mpu_utilization": [0.05, 0.08, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0],
    "freq_ratio": [1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
    "silu": [20, 30, 40, 50, 60, 65, 70, 75, 80, 90, 100, 120, 150, 200],
    "softplus": [10, 20, 30, 40, 45, 50, 55, 60, 70, 80, 100, 120],
}


def build_scenarios():
    tables = default_tables()
    m2 = build_model("mamba2", "prefill", SEED)
    m1 = build_model("mamba", "prefill", SEED)
    m1d = build_model("mamba", "decode", SEED)
    return {
        "m2_base": m2,
        "m2_cumba": apply_cumba(m2),
        "m2_reduba": apply_reduba(m2),
        "m2_both": apply_reduba(apply_cumba(m2)),
        "m1_base": m1,
        "m1_softplus": apply_actiba(m1, tables, kinds=["softplus"]),
        "m1_silu": apply_actiba(m1, tables, kinds=["silu"]),
        "m1_full": apply_actiba(m1, tables),
        "m1d_base": m1d,
        "m1d_full": apply_actiba(m1d, tables),
    }


def make_config(params) -> CostConfig:
    dsp = 500.0
    return CostConfig(
        mpu_macs_per_cycle=int(params["mpu_macs_per_cycle"]),
        mpu_freq_mhz=dsp * params["freq_ratio"],
        dsp_lanes=int(params["dsp_lanes"]),
        dsp_freq_mhz=dsp,
        sram_bw_bytes_per_cycle=float(params["sram_bw_bytes_per_cycle"]),
        dsp_regfile_bytes=16,
        act_cycles_per_vector={
            "silu": float(params["silu"]),
            "softplus": float(params["softplus"]),
            "sigmoid": 12.0,
            "exp": 8.0,
        },
        mpu_utilization=float(params["mpu_utilization"]),
    )


def evaluate(graphs, params):
    cfg = make_config(params)
    reports = {name: cost_graph(g, cfg) for name, g in graphs.items()}
    ratios = {
        "m2_cumba": speedup(reports["m2_base"], reports["m2_cumba"]),
        "m2_reduba": speedup(reports["m2_base"], reports["m2_reduba"]),
        "m2_both": speedup(reports["m2_base"], reports["m2_both"]),
        "m1_softplus": speedup(reports["m1_base"], reports["m1_softplus"]),
        "m1_silu": speedup(reports["m1_base"], reports["m1_silu"]),
        "m1_full": speedup(reports["m1_base"], reports["m1_full"]),
        "m1_decode_full": speedup(reports["m1d_base"], reports["m1d_full"]),
    }
    err = max(abs(ratios[k] - t) / t for k, t in TARGETS.items())

    penalty = 0.0
    cs_share = reports["m2_base"].breakdown.get("CumSum", 0.0)
    if cs_share <= 0.505:
        penalty += 10.0 * (0.505 - cs_share)
    bd = reports["m1_base"].breakdown
    top = sorted(bd, key=bd.get, reverse=True)[:2]
    if set(top) != {"SiLU", "Softplus"}:
        penalty += 1.0
    for base, opt in (
        ("m2_base", "m2_cumba"),
        ("m2_base", "m2_reduba"),
        ("m1_base", "m1_full"),
    ):
        if reports[opt].total_us >= reports[base].total_us:
            penalty += 1.0
    return err + penalty, ratios, cs_share, reports


def coordinate_search(graphs, start):
    best = dict(start)
    best_score, _, _, _ = evaluate(graphs, best)
    improved = True
    sweep = 0
    while improved and sweep < 12:
        improved = False
        sweep += 1
        for key, grid in GRIDS.items():
            for value in grid:
                if value == best[key]:
                    continue
                cand = dict(best, **{key: value})
                score, _, _, _ = evaluate(graphs, cand)
                if score < best_score - 1e-9:
                    best_score, best = score, cand
                    improved = True
        print(f"sweep {sweep}: score {best_score:.4f} params {best}")
    return best, best_score


def refine(graphs, best, best_score):
    """Local multiplicative nudges on the continuous parameters."""
    cont = ["sram_bw_bytes_per_cycle", "mpu_utilization", "freq_ratio", "silu", "softplus"]
    for step in (0.15, 0.07, 0.03, 0.015):
        improved = True
        while improved:
            improved = False
            for key in cont:
                for f in (1 - step, 1 + step):
                    cand = dict(best, **{key: best[key] * f})
                    if key == "mpu_utilization" and not 0 < cand[key] <= 1:
                        continue
                    score, _, _, _ = evaluate(graphs, cand)
                    if score < best_score - 1e-9:
                        best_score, best = score, cand
                        improved = True
    return best, best_score


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    default_out = Path(__file__).resolve().parent.parent / "src/xamba/calibration/lnl.json"
    ap.add_argument("--out", default=str(default_out))
    args = ap.parse_args()

    graphs = build_scenarios()
    starts = [
        {
            "dsp_lanes": 32,
            "mpu_macs_per_cycle": 2048,
            "sram_bw_bytes_per_cycle": 512,
            "mpu_utilization": 0.5,
            "freq_ratio": 2.0,
            "silu": 70,
            "softplus": 50,
        },
        {
            "dsp_lanes": 16,
            "mpu_macs_per_cycle": 4096,
            "sram_bw_bytes_per_cycle": 256,
            "mpu_utilization": 0.2,
            "freq_ratio": 3.0,
            "silu": 100,
            "softplus": 60,
        },
    ]
    best, best_score = None, float("inf")
    for start in starts:
        cand, score = coordinate_search(graphs, start)
        cand, score = refine(graphs, cand, score)
        if score < best_score:
            best, best_score = cand, score

    score, ratios, cs_share, reports = evaluate(graphs, best)
    # Absolute microseconds are not contracted (the desk-scale block is far
    # smaller than the measured 130M model); keep realistic clocks and round
    # the fitted values for a tidy committed file.
    best["silu"] = round(best["silu"], 3)
    best["softplus"] = round(best["softplus"], 3)
    best["mpu_utilization"] = round(best["mpu_utilization"], 4)
    best["sram_bw_bytes_per_cycle"] = round(best["sram_bw_bytes_per_cycle"], 3)
    best["freq_ratio"] = round(best["freq_ratio"], 4)
    cfg = make_config(best)
    score, ratios, cs_share, reports = evaluate(graphs, best)

    print("\nfinal score:", round(score, 5))
    for k, t in TARGETS.items():
        r = ratios[k]
        print(f"  {k:16s} {r:6.3f}  target {t}  rel err {abs(r - t) / t * 100:5.1f}%")
    print(f"  mamba2 CumSum share {cs_share:.3f}")
    bd = reports["m1_base"].breakdown
    print("  mamba top shares:", sorted(bd.items(), key=lambda kv: -kv[1])[:4])
    final = cost_graph(graphs["m1d_base"], cfg)
    print(f"  baseline decode tokens/s {tokens_per_second(final):.1f}")

    Path(args.out).write_text(cfg.to_json() + "\n")
    print("wrote", args.out)


if __name__ == "__main__":
    main()
