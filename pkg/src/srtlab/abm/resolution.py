"""Repayments, firm bankruptcies and interbank default cascades."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .config import ModelConfig
from .markets import settle
from .state import EconomyState


@dataclass(frozen=True)
class CascadeReport:
    """One contagion event.  ``total_losses`` is measured on the pre-cascade network."""

    defaulted_banks: frozenset
    cascade_size: int
    total_losses: float
    trigger: int
    initial: frozenset
    step: int = -1

    def as_dict(self) -> dict:
        return {
            "defaulted_banks": sorted(int(b) for b in self.defaulted_banks),
            "cascade_size": self.cascade_size,
            "total_losses": self.total_losses,
            "trigger": self.trigger,
            "initial": sorted(int(b) for b in self.initial),
            "step": self.step,
        }


def cascade_fixed_point(L: np.ndarray, capital: np.ndarray, initial: Sequence[int],
                        order: Optional[Sequence[int]] = None) -> frozenset:
    """Zero-recovery contagion: default set reached from ``initial``.

    Banks are written down one defaulted debtor at a time, in ``order`` if given
    (the result does not depend on it, since the set only grows and a bank's
    loss is a sum over the set).
    """
    L = np.asarray(L, dtype=float)
    capital = np.asarray(capital, dtype=float)
    defaulted = set(int(i) for i in initial)
    queue = list(defaulted) if order is None else [int(i) for i in order if int(i) in defaulted]
    processed: set = set()
    remaining = capital.copy()
    while queue:
        i = queue.pop(0)
        if i in processed:
            continue
        processed.add(i)
        remaining -= L[i]
        fresh = [int(j) for j in np.flatnonzero(remaining < 0) if int(j) not in defaulted]
        if order is not None:
            rank = {b: k for k, b in enumerate(order)}
            fresh.sort(key=lambda b: rank.get(b, len(rank) + b))
        defaulted.update(fresh)
        queue.extend(fresh)
    return frozenset(defaulted)


def resolve_bank_cascade(state: EconomyState, cfg: ModelConfig,
                         events: Optional[list] = None) -> Optional[CascadeReport]:
    """Resolve defaults among active banks with negative capital.

    Creditors of each defaulted bank lose their whole interbank claim.  Every
    interbank position of a defaulted bank is then closed and the bank is
    recapitalized at its initial capital, so it can keep operating if the
    run continues.
    """
    s = state
    initial = [int(b) for b in np.flatnonzero((s.bank_capital < 0) & ~s.bank_defaulted)]
    if not initial:
        return None
    net = s.network()
    L0 = net.liabilities
    dead = cascade_fixed_point(L0, s.bank_capital, initial)
    idx = np.array(sorted(dead))
    losses = float(L0[idx].sum())
    s.bank_capital -= L0[idx].sum(axis=0)
    keep = {k: l for k, l in s.ib_loans.items() if l.debtor not in dead and l.creditor not in dead}
    s.set_ib_loans(keep)
    s.bank_capital[idx] = cfg.bank_capital
    report = CascadeReport(dead, len(dead), losses, min(initial), frozenset(initial), s.t)
    if events is not None:
        events.append(("bank_default", s.t, report))
    return report


def _principal_due(principal, notional, cfg: ModelConfig):
    # straight-line amortization: tau of the original amount each step, so a
    # loan lives 1 / tau steps; dust below min_principal is settled at once
    part = np.minimum(principal, cfg.tau * notional)
    return np.where(principal - part < cfg.min_principal, principal, part)


def firm_debt_service(state: EconomyState, cfg: ModelConfig) -> np.ndarray:
    """Per-firm amount due at the next repayment on current loans."""
    book = state.firm_loans
    due = _principal_due(book.principal, book.notional, cfg) + book.principal * book.rate / cfg.steps_per_year
    return np.bincount(book.firm, weights=due, minlength=state.F)


def repayments(state: EconomyState, cfg: ModelConfig, events: Optional[list] = None) -> np.ndarray:
    """Pay ``tau`` of each loan's original principal plus interest accrued this step.

    Firms that cannot pay in full pay nothing and are returned as bankrupt.
    Banks always pay; their liquidity may go negative.  Returns the bankrupt
    firm mask.
    """
    s = state
    F = s.F
    spy = cfg.steps_per_year
    book = s.firm_loans
    principal_part = _principal_due(book.principal, book.notional, cfg)
    interest = book.principal * book.rate / spy
    closing = principal_part >= book.principal
    due = principal_part + interest
    due_by_firm = np.bincount(book.firm, weights=due, minlength=F)
    bankrupt = s.firm_liquidity < due_by_firm * (1 - 1e-12)
    pays = ~bankrupt[book.firm]
    paid = np.where(pays, due, 0.0)
    paid_by_firm = np.bincount(book.firm, weights=paid, minlength=F)
    received = np.bincount(book.bank, weights=paid, minlength=s.B)
    s.firm_liquidity -= paid_by_firm
    s.bank_liquidity += received
    s.bank_capital += np.bincount(book.bank, weights=np.where(pays, interest, 0.0), minlength=s.B)
    book.principal = np.where(pays, book.principal - principal_part, book.principal)
    book.keep(~(pays & closing))

    if s.ib_loans:
        updated = {}
        for k, loan in s.ib_loans.items():
            p = loan.principal_outstanding
            part = float(_principal_due(p, loan.notional, cfg))
            interest_ib = p * loan.rate / spy
            s.bank_liquidity[loan.debtor] -= part + interest_ib
            s.bank_liquidity[loan.creditor] += part + interest_ib
            s.bank_capital[loan.debtor] -= interest_ib
            s.bank_capital[loan.creditor] += interest_ib
            if part < p:
                updated[k] = _with_principal(loan, p - part)
        s.set_ib_loans(updated)
    return bankrupt


def _with_principal(loan, p):
    return replace(loan, principal_outstanding=p)


def resolve_firm_bankruptcies(state: EconomyState, bankrupt: np.ndarray, cfg: ModelConfig,
                              events: Optional[list] = None) -> np.ndarray:
    """Write off loans of bankrupt firms and restart them.

    An overdrawn account is first funded by the firm's bank, which then
    counts as a creditor for that amount.  The firm's liquidity and its owner's account (up to what is still owed)
    are shared among creditor banks pro rata to exposure; the rest is a
    capital loss, also pro rata.  The firm restarts with zero liquidity,
    no staff, and the current average price and expected demand.  Returns
    per-bank write-offs.
    """
    s = state
    B = s.B
    writeoff = np.zeros(B)
    firms = np.flatnonzero(bankrupt)
    if not len(firms):
        return writeoff
    book = s.firm_loans
    avg_price = float(np.mean(s.firm_price[~bankrupt])) if (~bankrupt).any() else float(np.mean(s.firm_price))
    avg_demand = float(np.mean(s.firm_demand[~bankrupt])) if (~bankrupt).any() else float(np.mean(s.firm_demand))
    for f in firms:
        mine = book.firm == f
        exposure = np.bincount(book.bank[mine], weights=book.principal[mine], minlength=B)
        overdraft = max(-float(s.firm_liquidity[f]), 0.0)
        if overdraft:
            # the account bank funds the overdraft and joins the creditors
            fb = s.firm_bank[f]
            s.bank_liquidity[fb] -= overdraft
            s.firm_liquidity[f] = 0.0
            exposure[fb] += overdraft
        debt = float(exposure.sum())
        cash = max(float(s.firm_liquidity[f]), 0.0)
        owner = int(s.firm_owner[f])
        from_owner = min(max(float(s.hh_account[owner]), 0.0), max(debt - cash, 0.0))
        recovered = min(cash + from_owner, debt)
        share = exposure / debt if debt > 0 else exposure
        s.bank_liquidity += share * recovered
        s.hh_account[owner] -= from_owner
        # any cash beyond the debt goes to the owner (same-step customer transfer)
        surplus = cash - (recovered - from_owner)
        s.hh_account[owner] += surplus
        settle(s, cfg, s.firm_bank[f], surplus, -1)
        settle(s, cfg, s.hh_bank[owner], surplus, +1)
        s.firm_liquidity[f] = 0.0
        loss = share * (debt - recovered)
        s.bank_capital -= loss
        writeoff += loss
        book.keep(~mine)
        s.hh_employer[s.hh_employer == f] = -1
        s.firm_workers[f] = 0
        s.firm_price[f] = avg_price
        s.firm_demand[f] = avg_demand
        s.firm_sales[f] = avg_demand
        s.firm_output[f] = avg_demand
        if events is not None:
            events.append(("firm_bankruptcy", s.t, int(f), debt, recovered))
    return writeoff
