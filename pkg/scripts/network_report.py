"""Systemic-risk report for a liability network on disk or a synthetic one.

Prints the riskiest banks by DebtRank, the liabilities with the largest
marginal systemic effect, and the tax a new loan would pay from the safest
and the riskiest lender.

    python3 scripts/network_report.py --banks 40 --seed 1
    python3 scripts/network_report.py --edges e.csv --nodes n.csv
"""

import argparse

import numpy as np

from srtlab.debtrank import rank_order, risk_profile
from srtlab.io import parse_network, scale_free_network
from srtlab.metrics import marginal_scatter
from srtlab.network import LoanRecord
from srtlab.systemic_loss import DefaultModel, expected_loss_total, srt_quote


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--edges")
    ap.add_argument("--nodes")
    ap.add_argument("--banks", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--zeta", type=float, default=1.0)
    ap.add_argument("--top", type=int, default=5)
    args = ap.parse_args()

    nf = (parse_network(args.edges, args.nodes) if args.edges
          else scale_free_network(args.banks, seed=args.seed))
    net, C = nf.network, nf.capital
    model = DefaultModel(nf.p_def)
    prof = risk_profile(net, C)
    print(f"{len(nf.ids)} banks, total interbank volume {prof.values.V_total:.1f}, "
          f"expected systemic loss {expected_loss_total(prof, model):.3f}/year")

    print("riskiest banks:")
    for i in rank_order(prof.R)[: args.top]:
        print(f"  {nf.ids[i]:>6s}  R={prof.R[i]:.4f}  capital={C[i]:.1f}")

    L = net.liabilities
    pts = marginal_scatter(net, C, model)
    pairs = [tuple(ix) for ix in np.argwhere(L > 0)]
    print("liabilities adding the most systemic risk:")
    for (m, n), (x, d) in sorted(zip(pairs, pts), key=lambda t: t[1][1])[: args.top]:
        print(f"  {nf.ids[m]:>6s} -> {nf.ids[n]:<6s} share {x:.3f}  dEL {d:.4f}")

    borrower = int(rank_order(prof.R)[-1])
    amount = float(np.median(L[L > 0])) if (L > 0).any() else 1.0
    quotes = []
    for j in range(len(nf.ids)):
        if j != borrower:
            q = srt_quote(net, C, model, LoanRecord(10**9, borrower, j, amount), 1.0, args.zeta)
            quotes.append((q.tax, j))
    quotes.sort()
    lo, hi = quotes[0], quotes[-1]
    print(f"one-year loan of {amount:.2f} to bank {nf.ids[borrower]}: tax from "
          f"{nf.ids[lo[1]]} = {lo[0]:.5f}, from {nf.ids[hi[1]]} = {hi[0]:.5f}")


if __name__ == "__main__":
    main()
