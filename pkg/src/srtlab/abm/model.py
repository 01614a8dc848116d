"""One model step and a full run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import ModelConfig
from .markets import InterbankDesk, settle, credit_market, firm_plan, goods_market, interbank_market, labor_market
from .resolution import CascadeReport, firm_debt_service, repayments, resolve_bank_cascade, resolve_firm_bankruptcies
from .state import EconomyState, init_state


@dataclass
class StepResult:
    t: int
    cascade: Optional[CascadeReport] = None
    firm_bankruptcies: int = 0
    firm_credit: float = 0.0
    ib_volume: float = 0.0
    taxes: float = 0.0
    degenerate: bool = False


def pay_dividends(state: EconomyState, cfg: ModelConfig) -> None:
    """Firms pay out part of cash beyond next step's wage bill and their debt; banks pay out excess capital."""
    s = state
    buffer = cfg.w * s.firm_workers + cfg.debt_buffer * s.firm_loans.debt_by_firm(s.F)
    div = cfg.firm_payout * np.maximum(0.0, s.firm_liquidity - buffer)
    owners = s.firm_owner
    s.firm_liquidity -= div
    s.hh_account[owners] += div
    settle(s, cfg, s.firm_bank, div, -1)
    settle(s, cfg, s.hh_bank[owners], div, +1)

    free = s.bank_liquidity - cfg.reserve_ratio * s.deposits()
    excess = np.maximum(0.0, s.bank_capital - cfg.bank_capital)
    customers = np.bincount(s.hh_bank, minlength=s.B)
    bdiv = cfg.bank_payout * np.minimum(excess, np.maximum(free, 0.0))
    bdiv[customers == 0] = 0.0
    s.bank_capital -= bdiv
    s.bank_liquidity -= bdiv
    s.hh_account += (bdiv / np.maximum(customers, 1))[s.hh_bank]


def step(state: EconomyState, cfg: ModelConfig, rng: np.random.Generator,
         events: Optional[list] = None, audit: Optional[list] = None) -> StepResult:
    """Advance the economy one step; mutates ``state``."""
    s = state
    s.t += 1
    s.new_ib_loans = []
    res = StepResult(s.t)
    fund0 = s.bailout_fund

    # (1) planning and credit, (2) interbank refinancing nested in it
    avg_price = float(np.mean(s.firm_price))
    # cash already committed to debt service is not available for wages
    committed = firm_debt_service(s, cfg)
    demand, price, workforce, credit = firm_plan(
        s.firm_price, s.firm_sales, s.firm_output, s.firm_liquidity - committed, avg_price, cfg, rng)
    s.firm_demand, s.firm_price = demand, price
    bank_shock = rng.uniform(0, cfg.sigma_bank, size=s.B)
    ib_shock = rng.uniform(0, cfg.sigma_ib, size=s.B)
    desk = InterbankDesk(s, cfg, ib_shock, rng, audit=audit)
    outcome = credit_market(s, credit, cfg, rng, desk, bank_shock, events)
    res.firm_credit = float(outcome.granted.sum())

    # (3) labor, wages and production, (4) goods
    labor_market(s, workforce, cfg, rng)
    goods_market(s, cfg, rng)

    # (5) banks whose payments outflows left them short borrow back to zero
    short = np.flatnonzero((s.bank_liquidity < 0) & ~s.bank_defaulted)
    if len(short):
        deposits = s.deposits()
        for b in short[rng.permutation(len(short))]:
            need = -float(s.bank_liquidity[b])
            if need > 0:
                interbank_market(desk, int(b), need, desk.free_liquidity(deposits), events)

    res.ib_volume = float(sum(l.notional for l in s.new_ib_loans))
    res.taxes = s.bailout_fund - fund0

    # (6) repayments, (7) firm bankruptcies, then payouts
    bankrupt = repayments(s, cfg, events)
    resolve_firm_bankruptcies(s, bankrupt, cfg, events)
    res.firm_bankruptcies = int(bankrupt.sum())
    pay_dividends(s, cfg)

    # (8) interbank contagion
    res.cascade = resolve_bank_cascade(s, cfg, events)
    res.degenerate = bool(s.firm_workers.sum() == 0 and res.firm_credit == 0 and s.t > 1)
    return res


@dataclass
class RunResult:
    config: ModelConfig
    seed: int
    steps_run: int
    cascades: list
    final_state: EconomyState = field(repr=False)
    degenerate: bool = False


def simulate(cfg: ModelConfig, seed: int, observer: Optional[Callable] = None,
             events: Optional[list] = None, audit: Optional[list] = None) -> RunResult:
    """Run up to ``cfg.steps`` steps.

    ``observer(state, step_result)`` is called after every step.  With
    ``stop_on_first_cascade`` the run ends after the step in which the first
    interbank default is resolved.
    """
    rng = np.random.default_rng(seed)
    state = init_state(cfg, rng)
    cascades = []
    degenerate = False
    for _ in range(cfg.steps):
        r = step(state, cfg, rng, events, audit)
        if observer is not None:
            observer(state, r)
        if r.cascade is not None:
            cascades.append(r.cascade)
            if cfg.stop_on_first_cascade:
                break
        if r.degenerate:
            degenerate = True
            break
    return RunResult(cfg, seed, state.t, cascades, state, degenerate)
