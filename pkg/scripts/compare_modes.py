"""Run the model under no tax, SRT and FTT on shared seeds and tabulate the outcomes.

Writes per-mode run records and summaries plus side-by-side histograms of
losses, cascade sizes and step-100 volume, then prints the headline ratios.

    python3 scripts/compare_modes.py --runs 200 --out results/compare
"""

import argparse
import json
import os

from srtlab.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--config", help="config JSON (defaults otherwise)")
    ap.add_argument("--out", default="results/compare")
    args = ap.parse_args()

    argv = ["compare", "--runs", str(args.runs), "--seed", str(args.seed),
            "--workers", str(args.workers), "--out", args.out]
    if args.config:
        argv += ["--config", args.config]
    if cli_main(argv):
        raise SystemExit(1)

    with open(os.path.join(args.out, "compare.json")) as fh:
        q = json.load(fh)["quantiles"]
    rows = [("losses p95", "losses_p95"), ("max cascade", "cascade_size_max"),
            ("median volume @T", "volume_median"), ("median |marginal|", "marginal_abs_median")]
    print(f"{'':22s}{'none':>12s}{'srt':>12s}{'ftt':>12s}{'srt/none':>10s}{'ftt/none':>10s}")
    for label, key in rows:
        vals = [q[m][key] for m in ("none", "srt", "ftt")]
        ratio = [f"{v / vals[0]:.2f}" if vals[0] and v is not None else "-" for v in vals[1:]]
        cells = "".join(f"{v:12.4g}" if v is not None else f"{'-':>12s}" for v in vals)
        print(f"{label:22s}{cells}{ratio[0]:>10s}{ratio[1]:>10s}")


if __name__ == "__main__":
    main()
