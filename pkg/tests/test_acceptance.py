"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a ``criterion N: PASS|FAIL ...`` line that pytest prints in
an "acceptance criteria" section at the end of the run.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import brute_debtrank, liability_weights, quad_discount_mass
from srtlab.abm import ModelConfig, init_state, step
from srtlab.cli import compare_modes
from srtlab.debtrank import EconomicValues, risk_profile
from srtlab.metrics import run_batch
from srtlab.network import LiabilityNetwork, LoanRecord, with_loan, without_loan
from srtlab.systemic_loss import (DefaultModel, discount_mass, marginal_loan_effect,
                                  srt_quote)

pytestmark = pytest.mark.acceptance


def report(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
    return ok


def random_network(rng, B, density=0.5):
    L = rng.uniform(0, 10, (B, B)) * (rng.random((B, B)) < density)
    np.fill_diagonal(L, 0)
    return L, rng.uniform(0.5, 20, B)


def test_1_debtrank_matches_brute_force_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        B = int(rng.integers(1, 7))
        L, C = random_network(rng, B)
        v, V = liability_weights(L.tolist())
        got = risk_profile(LiabilityNetwork.from_matrix(L), C,
                           values=EconomicValues(np.array(v), V)).R
        for i in range(B):
            worst = max(worst, abs(got[i] - brute_debtrank(L.tolist(), C.tolist(), v, i)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 10
    report(1, ok, f"1000 networks, max |R - oracle| = {worst:.2e} (tol 1e-12), {elapsed:.1f}s (limit 10s)")
    assert ok


def test_2_taylor_limit_and_quadrature():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst_taylor = 0.0
    n_taylor = 0
    while n_taylor < 200:
        B = int(rng.integers(2, 7))
        L, C = random_network(rng, B)
        net = LiabilityNetwork.from_matrix(L)
        i, j = rng.choice(B, 2, replace=False)
        loan = LoanRecord(10_000, int(i), int(j), float(rng.uniform(0.1, 10)))
        p = float(rng.uniform(1e-5, 0.01))
        T = float(rng.uniform(0.01, 1.0))
        model = DefaultModel.uniform(B, p, discount_rate=0.0)
        if model.hazard[0] * T > 0.01:
            continue
        q = srt_quote(net, C, model, loan, T, 0.02)
        V = float(L.sum())
        # the tax is never negative, so a risk-reducing loan is quoted at zero
        approx = 0.02 * V * max(0.0, float(q.delta_R.sum())) * p * T
        if approx == 0:
            assert q.tax == 0.0
        else:
            worst_taylor = max(worst_taylor, abs(q.tax / approx - 1))
            n_taylor += 1
    worst_quad = 0.0
    for h in np.linspace(0, 0.5, 11):
        for r in np.linspace(0, 0.5, 11):
            for T in (1e-3, 0.1, 0.5, 1.0, 2.5, 7.0, 15.0, 30.0):
                exact = quad_discount_mass(h, r, T)
                got = discount_mass(h, r, T)
                if exact == 0:
                    assert got == 0
                else:
                    worst_quad = max(worst_quad, abs(got / exact - 1))
    elapsed = time.perf_counter() - t0
    ok = worst_taylor <= 0.01 and worst_quad <= 1e-9 and elapsed < 5
    report(2, ok, f"Taylor limit max rel err {worst_taylor:.2e} (tol 1e-2) on {n_taylor} quotes; "
                  f"quadrature max rel err {worst_quad:.2e} (tol 1e-9); {elapsed:.1f}s (limit 5s)")
    assert ok


def test_3_round_trips_exact():
    rng = np.random.default_rng(3)
    bad_net = bad_effect = 0
    for case in range(10_000):
        B = int(rng.integers(2, 6))
        loans = []
        for k in range(int(rng.integers(1, 8))):
            i, j = rng.choice(B, 2, replace=False)
            loans.append(LoanRecord(k, int(i), int(j), float(rng.uniform(0.01, 10))))
        net = LiabilityNetwork.from_loans(B, loans)
        C = rng.uniform(0.5, 20, B)
        loan = loans[int(rng.integers(len(loans)))]
        removed = without_loan(net, loan.loan_id)
        back = with_loan(removed, loan)
        if not np.array_equal(back.liabilities, net.liabilities):
            bad_net += 1
        model = DefaultModel.uniform(B, 0.01)
        base = risk_profile(net, C)
        d_remove = marginal_loan_effect(net, C, model, loan.loan_id, "remove", base=base)
        d_add = marginal_loan_effect(removed, C, model, direction="add", loan=loan,
                                     values=base.values)
        if d_remove + d_add != 0.0:
            bad_effect += 1
    ok = bad_net == 0 and bad_effect == 0
    report(3, ok, f"10000 cases: {bad_net} inexact network round trips, {bad_effect} nonzero "
                  "removal+re-addition sums")
    assert ok


def test_4_cash_conserved_every_step():
    worst = 0.0
    t0 = time.perf_counter()
    for mode in ("none", "srt", "ftt"):
        cfg = ModelConfig(tax_mode=mode, steps=500, stop_on_first_cascade=False)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            s = init_state(cfg, rng)
            cash0 = s.total_cash()
            for _ in range(cfg.steps):
                step(s, cfg, rng)
                worst = max(worst, abs(s.total_cash() - cash0) / cash0)
    ok = worst <= 1e-6
    report(4, ok, f"50 runs x 500 steps x 3 modes, max relative cash drift {worst:.2e} (tol 1e-6), "
                  f"{time.perf_counter() - t0:.0f}s")
    assert ok


@pytest.fixture(scope="module")
def mode_batches():
    cfg = ModelConfig()
    t0 = time.perf_counter()
    res = compare_modes(cfg, runs=200, seed=0)
    res["elapsed"] = time.perf_counter() - t0
    res["config_hash"] = cfg.config_hash()
    return res


def _q(res, mode, key):
    return res["summaries"][mode].quantiles[key]


def test_5_srt_removes_large_losses(mode_batches):
    none = _q(mode_batches, "none", "losses_p95")
    srt = _q(mode_batches, "srt", "losses_p95")
    ftt = _q(mode_batches, "ftt", "losses_p95")
    srt_ok = srt <= 0.5 * none
    ftt_ok = abs(ftt - none) <= 0.25 * none
    ok = srt_ok and ftt_ok and mode_batches["elapsed"] < 600
    report(5, ok, f"p95 losses none={none:.2f} srt={srt:.2f} (need <= {0.5 * none:.2f}) "
                  f"ftt={ftt:.2f} (need within +-25% of none); batch 3x200 runs "
                  f"{mode_batches['elapsed']:.0f}s (target 600s); config {mode_batches['config_hash']}")
    assert ok


def test_6_srt_shrinks_largest_cascade(mode_batches):
    none = _q(mode_batches, "none", "cascade_size_max")
    srt = _q(mode_batches, "srt", "cascade_size_max")
    ok = none >= 1.5 * srt
    report(6, ok, f"max cascade none={none} srt={srt} (need none >= 1.5 x srt); "
                  f"config {mode_batches['config_hash']}")
    assert ok


def test_7_volume_kept_by_srt_cut_by_ftt(mode_batches):
    none = _q(mode_batches, "none", "volume_median")
    srt = _q(mode_batches, "srt", "volume_median")
    ftt = _q(mode_batches, "ftt", "volume_median")
    missing = {m: mode_batches["summaries"][m].n_volume_missing for m in ("none", "srt", "ftt")}
    ok = none is not None and srt >= 0.8 * none and ftt <= 0.5 * none
    report(7, ok, f"median volume at step 100 none={none:.2f} srt={srt:.2f} (need >= 0.8 x none) "
                  f"ftt={ftt:.2f} (need <= 0.5 x none); runs ended before step 100: {missing}")
    assert ok


def test_8_srt_cuts_marginal_risk_of_liabilities(mode_batches):
    none = _q(mode_batches, "none", "marginal_abs_median")
    srt = _q(mode_batches, "srt", "marginal_abs_median")
    n = {m: len(mode_batches["summaries"][m].scatter) for m in ("none", "srt")}
    ok = none is not None and srt is not None and srt <= none / 5
    report(8, ok, f"median |marginal effect| at step 100 none={none:.3g} srt={srt:.3g} "
                  f"(need srt <= none / 5); liabilities none={n['none']} srt={n['srt']}")
    assert ok


def test_9_batch_independent_of_worker_count():
    cfg = ModelConfig(steps=150)
    a = run_batch(cfg, 6, base_seed=100, workers=1).to_json()
    b = run_batch(cfg, 6, base_seed=100, workers=2).to_json()
    c = run_batch(cfg, 6, base_seed=100, workers=3).to_json()
    ok = a == b == c
    report(9, ok, f"6-run batch summaries with 1, 2 and 3 workers byte-identical: {ok} "
                  f"({len(a)} bytes)")
    assert ok
