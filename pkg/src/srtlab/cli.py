"""Command line entry point: ``srtlab <command> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import io as sio
from .abm.config import TAX_MODES, ModelConfig
from .debtrank import economic_values, risk_profile
from .metrics import (BatchSummary, RunRecord, log_edges, marginal_scatter, run_records,
                      summarize)
from .network import LoanRecord, NetworkError
from .systemic_loss import DefaultModel, srt_quote


class CliError(Exception):
    pass


def _load(args) -> sio.NetworkFile:
    return sio.parse_network(args.edges, args.nodes)


def _model(nf: sio.NetworkFile, rate: float = 0.0) -> DefaultModel:
    return DefaultModel(nf.p_def, discount_rate=rate)


def _meta(args, **extra) -> dict:
    return sio.metadata(seed=None, config_hash=sio.input_hash(args.edges, args.nodes),
                        value_weights=args.value_weights, **extra)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        sio.write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_debtrank(args) -> None:
    nf = _load(args)
    values = economic_values(nf.network, args.value_weights)
    prof = risk_profile(nf.network, nf.capital, values=values)
    V = values.V_total
    rows = [(bid, float(r), float(v), float(p * V * r))
            for bid, r, v, p in zip(nf.ids, prof.R, values.v, nf.p_def)]
    _emit(sio.csv_text(("bank_id", "R", "v", "EL"), rows, _meta(args)), args.out)


def cmd_marginal(args) -> None:
    nf = _load(args)
    pts = marginal_scatter(nf.network, nf.capital, _model(nf), args.value_weights)
    L = nf.network.liabilities
    pairs = [tuple(ix) for ix in np.argwhere(L > 0)]
    rows = [(nf.ids[m], nf.ids[n], x, d) for (m, n), (x, d) in zip(pairs, pts)]
    _emit(sio.csv_text(("debtor_id", "creditor_id", "relative_size", "delta_EL"), rows, _meta(args)),
          args.out)


def cmd_quote(args) -> None:
    nf = _load(args)
    try:
        i, j = nf.index(args.debtor), nf.index(args.creditor)
    except KeyError as e:
        raise CliError(str(e.args[0])) from None
    if i == j:
        raise CliError("debtor and creditor must differ")
    if args.amount < 0:
        raise CliError("amount must be >= 0")
    if args.term <= 0:
        raise CliError("term must be positive")
    if not 0 < args.zeta <= 1:
        raise CliError("zeta must lie in (0, 1]")
    model = _model(nf, args.rate)
    loan = LoanRecord(max((l.loan_id for l in nf.network.loans), default=-1) + 1, i, j, args.amount)
    values = economic_values(nf.network, args.value_weights)
    q = srt_quote(nf.network, nf.capital, model, loan, args.term, args.zeta, values=values)
    body = q.as_dict()
    body["debtor"], body["creditor"] = nf.ids[i], nf.ids[j]
    _emit(sio.json_text(body, _meta(args)), args.out)


def _config(args, mode: Optional[str] = None) -> ModelConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = ModelConfig.from_json(fh.read())
    else:
        cfg = ModelConfig()
    if mode is not None:
        cfg = cfg.with_mode(mode)
    return cfg


def _records_csv(recs: Sequence[RunRecord], meta: dict) -> str:
    rows = [(r.seed, r.mode, r.steps_run, int(r.degenerate), r.cascade_size, float(r.total_losses),
             "" if r.volume_at_T is None else float(r.volume_at_T),
             "" if r.cascade is None else r.cascade.trigger) for r in recs]
    return sio.csv_text(("seed", "mode", "steps_run", "degenerate", "cascade_size", "total_losses",
                         "volume_at_T", "trigger"), rows, meta)


def _write_batch(out: str, cfg: ModelConfig, recs, summary: BatchSummary, seed: int, prefix: str = "") -> None:
    meta = sio.metadata(seed=seed, config_hash=cfg.config_hash(), value_weights=cfg.value_weights)
    sio.write_text(os.path.join(out, f"{prefix}runs.csv"), _records_csv(recs, meta))
    sio.write_text(os.path.join(out, f"{prefix}runs.json"),
                   sio.json_text({"runs": [r.as_dict() for r in recs]}, meta))
    sio.write_text(os.path.join(out, f"{prefix}summary.json"), summary.to_json() + "\n")
    sio.write_text(os.path.join(out, f"{prefix}config.json"), cfg.to_json() + "\n")


def cmd_simulate(args) -> None:
    cfg = _config(args, args.mode)
    os.makedirs(args.out, exist_ok=True)
    recs = run_records(cfg, args.runs, args.seed, args.workers)
    _write_batch(args.out, cfg, recs, summarize(recs, cfg, args.seed), args.seed)


def compare_modes(cfg: ModelConfig, runs: int, seed: int, workers: int = 1) -> dict:
    """Run every tax mode on the same seeds; histograms share bin edges."""
    recs = {m: run_records(cfg.with_mode(m), runs, seed, workers) for m in TAX_MODES}
    le = log_edges([r.total_losses for rs in recs.values() for r in rs])
    ve = log_edges([r.volume_at_T for rs in recs.values() for r in rs if r.volume_at_T is not None])
    summaries = {m: summarize(rs, cfg.with_mode(m), seed, loss_edges=le, volume_edges=ve)
                 for m, rs in recs.items()}
    return {"records": recs, "summaries": summaries, "loss_edges": le, "volume_edges": ve}


def _side_by_side(summaries: dict, attr: str, meta: dict) -> str:
    hists = {m: getattr(s, attr) for m, s in summaries.items()}
    first = next(iter(hists.values()))
    e = first.edges
    rows = []
    if first.log:
        rows.append(["zero", "", ""] + [hists[m].zeros for m in TAX_MODES])
    for k in range(len(e) - 1):
        rows.append([k, float(e[k]), float(e[k + 1])] + [hists[m].counts[k] for m in TAX_MODES])
    return sio.csv_text(["bin", "lower", "upper"] + list(TAX_MODES), rows, meta)


def cmd_compare(args) -> None:
    cfg = _config(args)
    os.makedirs(args.out, exist_ok=True)
    res = compare_modes(cfg, args.runs, args.seed, args.workers)
    meta = sio.metadata(seed=args.seed, config_hash=cfg.with_mode("none").config_hash(),
                        value_weights=cfg.value_weights)
    for m in TAX_MODES:
        _write_batch(args.out, cfg.with_mode(m), res["records"][m], res["summaries"][m], args.seed, f"{m}_")
    for name, attr in (("losses", "losses"), ("losses_conditional", "losses_conditional"),
                       ("cascade_size", "cascade_sizes"), ("volume", "volume")):
        sio.write_text(os.path.join(args.out, f"compare_{name}.csv"),
                       _side_by_side(res["summaries"], attr, meta))
    table = {m: s.quantiles for m, s in res["summaries"].items()}
    sio.write_text(os.path.join(args.out, "compare.json"), sio.json_text({"quantiles": table}, meta))


def cmd_fixture(args) -> None:
    nf = sio.scale_free_network(args.banks, seed=args.seed, mean_amount=args.mean_amount,
                                capital_ratio=args.capital_ratio, p_def=args.p_def)
    os.makedirs(args.out, exist_ok=True)
    meta = sio.metadata(seed=args.seed, config_hash=None, value_weights=None)
    sio.write_network(nf, os.path.join(args.out, "edges.csv"), os.path.join(args.out, "nodes.csv"), meta)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srtlab", description="Systemic-risk analytics and tax experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def network_args(sp):
        sp.add_argument("--edges", required=True, help="edge CSV: debtor_id,creditor_id,amount")
        sp.add_argument("--nodes", required=True, help="node CSV: bank_id,capital[,...,p_def]")
        sp.add_argument("--value-weights", choices=("liabilities", "assets"), default="liabilities")
        sp.add_argument("--out", help="output file (default: stdout)")

    errors = "errors: malformed or inconsistent input files exit with status 2"
    sp = sub.add_parser("debtrank", help="per-bank DebtRank, value weight and expected loss",
                        epilog=errors)
    network_args(sp)
    sp.set_defaults(func=cmd_debtrank)

    sp = sub.add_parser("marginal", help="marginal systemic effect of every liability", epilog=errors)
    network_args(sp)
    sp.set_defaults(func=cmd_marginal)

    sp = sub.add_parser("quote", help="systemic risk tax for one prospective loan",
                        epilog=errors + "; unknown banks, equal banks, negative amount or bad term/zeta too")
    network_args(sp)
    sp.add_argument("--debtor", required=True)
    sp.add_argument("--creditor", required=True)
    sp.add_argument("--amount", type=float, required=True)
    sp.add_argument("--term", type=float, required=True, help="loan term in years")
    sp.add_argument("--zeta", type=float, default=1.0)
    sp.add_argument("--rate", type=float, default=0.0, help="continuous discount rate per year")
    sp.set_defaults(func=cmd_quote)

    def sim_args(sp):
        sp.add_argument("--config", help="config JSON; omitted keys take defaults")
        sp.add_argument("--runs", type=int, default=200)
        sp.add_argument("--seed", type=int, default=0, help="base seed; run k uses seed+k")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", required=True, help="output directory")

    sim_errors = "errors: unreadable or invalid config, runs < 1"
    sp = sub.add_parser("simulate", help="batch of model runs in one tax mode", epilog=sim_errors)
    sim_args(sp)
    sp.add_argument("--mode", choices=TAX_MODES, default="none")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="all tax modes on shared seeds", epilog=sim_errors)
    sim_args(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("fixture", help="write a synthetic scale-free network")
    sp.add_argument("--banks", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mean-amount", type=float, default=10.0)
    sp.add_argument("--capital-ratio", type=float, default=0.25)
    sp.add_argument("--p-def", type=float, default=sio.DEFAULT_P_DEF)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_fixture)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "runs", 1) < 1:
        parser.error("--runs must be >= 1")
    try:
        args.func(args)
    except (CliError, NetworkError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"srtlab {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
