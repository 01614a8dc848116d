"""Market rules: firm planning, loan pricing, credit, interbank, labor and goods markets.

Payments between customer accounts held at different banks settle between
those banks' liquidity; payments between a customer and a bank move the
bank's liquidity against the account.  Both keep total cash unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..debtrank import RiskProfile, economic_values, impact_matrix, risk_profile
from ..network import LiabilityNetwork, LoanRecord, with_loan
from ..systemic_loss import DefaultModel, SrtQuote, srt_quote
from .config import ModelConfig
from .state import EconomyState


# --- firms -------------------------------------------------------------------

def firm_plan(price, sales, output, liquidity, avg_price, cfg: ModelConfig, rng):
    """Adaptive price/demand rule.

    Sold-out firms priced at or below average raise prices, firms left with
    unsold goods priced above average cut them.  Expected demand follows last
    output, nudged up after excess demand and down after excess supply.  Returns
    ``(demand, price, workforce, credit_demand)``.
    """
    price = np.asarray(price, dtype=float)
    sales = np.asarray(sales, dtype=float)
    output = np.asarray(output, dtype=float)
    F = len(price)
    sold_out = sales >= output * (1 - 1e-12)
    eta = rng.uniform(0, cfg.eta_max, size=F)
    nu = rng.uniform(0, cfg.nu_max, size=F)
    new_price = price.copy()
    # prices within rounding of the average count as average
    tol = 1e-12 * abs(avg_price)
    up = sold_out & (price <= avg_price + tol)
    down = ~sold_out & (price > avg_price + tol)
    new_price[up] *= 1 + eta[up]
    new_price[down] *= 1 - eta[down]
    # sold-out firms sold their whole output, so output is last sales there;
    # firms left with stock scale back from what they produced
    demand = np.where(sold_out, output * (1 + nu), output * (1 - nu))
    demand = np.maximum(demand, cfg.alpha)  # keep at least one worker's output in view
    workforce = np.ceil(demand / cfg.alpha - 1e-9).astype(int)
    credit = np.maximum(0.0, cfg.w * workforce - np.asarray(liquidity, dtype=float))
    return demand, new_price, workforce, credit


def fragility(debt, liquidity, eps: float):
    return np.asarray(debt, dtype=float) / (np.maximum(np.asarray(liquidity, dtype=float), 0.0) + eps)


def credit_premium(frag, cfg: ModelConfig):
    return np.minimum(cfg.rho_max, cfg.rho_coef * np.asarray(frag, dtype=float))


def bank_rate(bank_shock, frag, cfg: ModelConfig):
    """Firm-loan offer: base rate + bank specificity + firm credit-risk premium."""
    return cfg.r_base + np.asarray(bank_shock) + credit_premium(frag, cfg)


def ib_rate(lender_shock, borrower_frag, cfg: ModelConfig):
    return cfg.r_ib_base + np.asarray(lender_shock) + np.minimum(
        cfg.rho_ib_max, cfg.rho_ib_coef * np.asarray(borrower_frag, dtype=float))


# --- interbank ---------------------------------------------------------------

@dataclass
class Fill:
    lender: int
    amount: float
    rate: float
    tax: float
    total_rate: float
    loan: LoanRecord
    pre_net: LiabilityNetwork = field(repr=False)


@dataclass
class IbPlan:
    borrower: int
    requested: float
    fills: list
    net_after: LiabilityNetwork = field(repr=False)

    @property
    def filled(self) -> float:
        return sum(f.amount for f in self.fills)

    @property
    def complete(self) -> bool:
        return self.filled >= self.requested * (1 - 1e-12)

    @property
    def max_total_rate(self) -> float:
        return max((f.total_rate for f in self.fills), default=0.0)


class InterbankDesk:
    """Interbank market for one step.

    Every bank with free liquidity offers it; the borrower takes the lowest
    total rate (offered rate plus the tax expressed per year of loan term),
    splitting across lenders when one cannot cover the amount.
    """

    def __init__(self, state: EconomyState, cfg: ModelConfig, lender_shock: np.ndarray,
                 rng: np.random.Generator, audit: Optional[list] = None):
        self.state = state
        self.cfg = cfg
        self.shock = lender_shock
        self.rng = rng
        self.audit = audit
        self.term = cfg.loan_term_years
        self.model = DefaultModel.uniform(cfg.B, cfg.p_def, discount_rate=cfg.discount_rate,
                                          steps_per_year=cfg.steps_per_year)
        self._base_cache: dict = {}
        self.quotes_computed = 0

    # free liquidity is recomputed from state on demand
    def free_liquidity(self, deposits: np.ndarray) -> np.ndarray:
        s = self.state
        free = s.bank_liquidity - self.cfg.reserve_ratio * deposits
        free[s.bank_defaulted] = 0.0
        return free

    def borrower_fragility(self, net: LiabilityNetwork, b: int) -> float:
        owed = float(net.liabilities[b].sum())
        cap = float(self.state.bank_capital[b])
        return owed / cap if cap > 0 else (0.0 if owed == 0 else 1e9)

    def _base(self, net: LiabilityNetwork, capital: np.ndarray) -> RiskProfile:
        key = id(net)
        hit = self._base_cache.get(key)
        if hit is not None and hit[0] is net:
            return hit[1]
        prof = risk_profile(net, capital, weights=self.cfg.value_weights)
        self._base_cache[key] = (net, prof)
        return prof

    def quote(self, net: LiabilityNetwork, loan: LoanRecord) -> SrtQuote:
        capital = self.state.bank_capital
        base = self._base(net, capital)
        self.quotes_computed += 1
        return srt_quote(net, capital, self.model, loan, self.term, self.cfg.effective_zeta,
                         base=base)

    def plan(self, borrower: int, amount: float, free: np.ndarray) -> IbPlan:
        cfg, s = self.cfg, self.state
        net = s.network()
        supply = np.maximum(free, 0.0).copy()
        supply[borrower] = 0.0
        fills: list = []
        remaining = amount
        next_id = s.next_loan_id
        while remaining > 1e-12:
            lenders = np.flatnonzero(supply > 1e-12)
            if not len(lenders):
                break
            frag = self.borrower_fragility(net, borrower)
            rates = ib_rate(self.shock[lenders], frag, cfg)
            order = np.lexsort((self.rng.random(len(lenders)), rates))
            best = None
            v_owed = net.liabilities.sum(axis=1)
            for idx in order:
                j = int(lenders[idx])
                r = float(rates[idx])
                if best is not None and r >= best[0]:
                    break
                amt = min(remaining, float(supply[j]))
                loan = LoanRecord(next_id, borrower, j, amt, rate=r, origination_step=s.t)
                tax = 0.0
                if cfg.tax_mode == "ftt":
                    tax = cfg.ftt_rate * amt
                elif cfg.tax_mode == "srt" and v_owed[j] > 0:
                    # a lender that owes nothing passes no distress on and carries
                    # no economic value, so its quote is exactly zero
                    tax = self.quote(net, loan).tax
                total = r + tax / (amt * self.term)
                if best is None or total < best[0]:
                    best = (total, j, amt, r, tax, loan)
            total, j, amt, r, tax, loan = best
            if cfg.tax_mode == "srt":
                loan = LoanRecord(loan.loan_id, borrower, j, amt, rate=r, srt_paid=tax,
                                  origination_step=s.t)
            after = with_loan(net, loan)
            fills.append(Fill(j, amt, r, tax, total, loan, net))
            net = after
            supply[j] -= amt
            remaining -= amt
            next_id += 1
        return IbPlan(borrower, amount, fills, net)

    def execute(self, plan: IbPlan, events: Optional[list] = None, purpose: str = "refinance") -> None:
        s = self.state
        b = plan.borrower
        # every fill was priced at the capital in place before execution
        capital0 = s.bank_capital.copy() if self.audit is not None else None
        for f in plan.fills:
            s.bank_liquidity[f.lender] -= f.amount
            s.bank_liquidity[b] += f.amount
            if f.tax:
                s.bank_liquidity[b] -= f.tax
                s.bank_capital[b] -= f.tax
                s.bailout_fund += f.tax
            s.new_ib_loans.append(f.loan)
            s.ib_volume_by_step[s.t] = s.ib_volume_by_step.get(s.t, 0.0) + f.amount
            if events is not None:
                events.append(("ib_loan", s.t, f.loan.loan_id, b, f.lender, f.amount, f.rate, f.tax, purpose))
            if self.audit is not None:
                self.audit.append((f.pre_net, capital0, f.loan, f.tax))
        if plan.fills:
            s.ib_loans.update({f.loan.loan_id: f.loan for f in plan.fills})
            s._net = plan.net_after
            s.next_loan_id = plan.fills[-1].loan.loan_id + 1
        # capital moved (tax) so cached profiles keyed on the old capital are stale
        self._base_cache.clear()


def interbank_market(desk: InterbankDesk, borrower: int, amount: float, free: np.ndarray,
                     events: Optional[list] = None, allow_partial: bool = True,
                     purpose: str = "liquidity") -> IbPlan:
    """Borrow ``amount``; executes unless the fill is partial and partial fills are refused."""
    if amount <= 0:
        raise ValueError("amount must be positive")
    plan = desk.plan(borrower, amount, free)
    if plan.complete or allow_partial:
        desk.execute(plan, events, purpose)
    return plan


# --- credit market -----------------------------------------------------------

@dataclass
class CreditOutcome:
    granted: np.ndarray
    rates: np.ndarray
    unmet: np.ndarray
    refinanced: float = 0.0


def credit_market(state: EconomyState, demand: np.ndarray, cfg: ModelConfig, rng,
                  desk: InterbankDesk, bank_shock: np.ndarray,
                  events: Optional[list] = None) -> CreditOutcome:
    """Firms shop ``n`` random banks for credit and take the cheapest offer.

    A bank short of free liquidity refinances the gap on the interbank market
    and prices the loan at least at that marginal cost plus the firm's risk
    premium; if it cannot raise the full gap it makes no offer.  An offer above
    ``r_max`` makes the firm scale its request down to ``phi`` of the volume
    and shop the same banks again.
    """
    s = state
    F = s.F
    granted = np.zeros(F)
    rates = np.zeros(F)
    unmet = np.zeros(F)
    refinanced = 0.0
    active = np.flatnonzero(~s.bank_defaulted)
    if not len(active):
        return CreditOutcome(granted, rates, demand.copy())
    deposits = s.deposits()
    debt = s.firm_loans.debt_by_firm(F)
    seekers = np.flatnonzero(demand > 0)
    seekers = seekers[rng.permutation(len(seekers))]
    for f in seekers:
        cand = rng.choice(active, size=min(cfg.n, len(active)), replace=False)
        prem = float(credit_premium(fragility(debt[f], s.firm_liquidity[f], cfg.fragility_eps), cfg))
        amount = float(demand[f])
        pick = None
        for attempt in range(2):
            free = desk.free_liquidity(deposits)
            offers = []
            for b in cand:
                b = int(b)
                rate = cfg.r_base + bank_shock[b] + prem
                plan = None
                if free[b] < amount:
                    plan = desk.plan(b, amount - max(free[b], 0.0), free)
                    if not plan.complete:
                        continue
                    rate = max(rate, plan.max_total_rate + prem)
                offers.append((rate, rng.random(), b, plan))
            if not offers:
                break
            offers.sort(key=lambda o: (o[0], o[1]))
            pick = offers[0]
            if attempt == 0 and pick[0] > cfg.r_max:
                amount *= cfg.phi
                pick = None
                continue
            break
        if pick is None:
            unmet[f] = demand[f]
            continue
        rate, _, b, plan = pick
        if plan is not None:
            desk.execute(plan, events)
            refinanced += plan.filled
        s.bank_liquidity[b] -= amount
        s.firm_liquidity[f] += amount
        deposits[s.firm_bank[f]] += amount
        s.firm_loans.add(f, b, amount, rate)
        debt[f] += amount
        granted[f] = amount
        rates[f] = rate
        unmet[f] = demand[f] - amount
        if events is not None:
            events.append(("firm_loan", s.t, f, b, amount, rate))
    return CreditOutcome(granted, rates, unmet, refinanced)


# --- labor market ------------------------------------------------------------

def labor_market(state: EconomyState, desired: np.ndarray, cfg: ModelConfig, rng) -> np.ndarray:
    """Hire or fire toward the planned workforce, then pay wages.

    Firms commit to their plan whether or not credit covered it, so a firm
    that was rationed can run its account into overdraft.  Returns wage bills.
    """
    s = state
    F = s.F
    target = np.asarray(desired)
    emp = s.hh_employer
    for f in np.flatnonzero(s.firm_workers > target):
        staff = np.flatnonzero(emp == f)
        fire = rng.choice(staff, size=len(staff) - target[f], replace=False)
        emp[fire] = -1
    workers = np.bincount(emp[emp >= 0], minlength=F)
    vacancies = np.maximum(target - workers, 0)
    pool = np.flatnonzero((emp < 0) & ~s.hh_is_owner)
    pool = pool[rng.permutation(len(pool))]
    firm_order = rng.permutation(F)
    slots = np.repeat(firm_order, vacancies[firm_order])[:len(pool)]
    emp[pool[:len(slots)]] = slots
    workers = np.bincount(emp[emp >= 0], minlength=F)
    s.firm_workers = workers

    wages = cfg.w * workers.astype(float)
    employed = np.flatnonzero(emp >= 0)
    s.firm_liquidity -= wages
    s.hh_account[employed] += cfg.w
    settle(s, cfg, s.firm_bank, wages, -1)
    settle(s, cfg, s.hh_bank[employed], np.full(len(employed), cfg.w), +1)
    s.firm_output = cfg.alpha * workers.astype(float)
    return wages


def settle(s: EconomyState, cfg: ModelConfig, banks, amounts, sign: int) -> None:
    """Move bank liquidity with customer payments (no-op when settlement is off)."""
    if cfg.settle_deposits:
        s.bank_liquidity += sign * np.bincount(np.atleast_1d(banks), weights=np.atleast_1d(amounts),
                                               minlength=s.B)


# --- goods market ------------------------------------------------------------

def _ration(choice, wanted, inventory, rank, F):
    """First come first served allocation of ``inventory`` among buyers of each firm."""
    n = len(choice)
    order = np.lexsort((rank, choice))
    firm_sorted = choice[order]
    q_sorted = wanted[order]
    before = np.cumsum(q_sorted) - q_sorted
    starts = np.searchsorted(firm_sorted, np.arange(F))
    first = np.concatenate([before, [0.0]])[np.minimum(starts, n)]
    already = before - first[firm_sorted]
    got = np.clip(inventory[firm_sorted] - already, 0.0, q_sorted)
    out = np.empty(n)
    out[order] = got
    return out


def goods_market(state: EconomyState, cfg: ModelConfig, rng) -> np.ndarray:
    """Households spend ``c`` of their account, shopping among ``z`` sampled firms.

    Each household goes to the cheapest of its sampled firms that still has
    goods.  Households are served in a random order and output is rationed
    first come first served; a rationed household samples ``z`` new firms in
    the next round, up to ``goods_rounds`` rounds, and whatever it cannot
    spend stays on its account.  Firms are sampled with replacement.  Returns quantities sold.
    """
    s = state
    H, F = len(s.hh_account), s.F
    budget = cfg.c * np.maximum(s.hh_account, 0.0)
    rank = rng.permutation(H)
    inventory = s.firm_output.astype(float).copy()
    left = budget.copy()
    spent = np.zeros(H)
    sold = np.zeros(F)
    revenue = np.zeros(F)
    rows = np.arange(H)
    for _ in range(cfg.goods_rounds):
        sampled = rng.integers(0, F, size=(H, cfg.z))
        prices = np.where(inventory[sampled] > 0, s.firm_price[sampled], np.inf)
        col = np.argmin(prices, axis=1)
        shop = (left > 0) & np.isfinite(prices[rows, col])
        if not shop.any():
            break
        who = rows[shop]
        choice = sampled[who, col[shop]]
        p = s.firm_price[choice]
        wanted = left[who] / p
        got = _ration(choice, wanted, inventory, rank[who], F)
        pay = np.where(got == wanted, left[who], got * p)
        spent[who] += pay
        left[who] -= pay
        sold += np.bincount(choice, weights=got, minlength=F)
        paid_to = np.bincount(choice, weights=pay, minlength=F)
        revenue += paid_to
        inventory = np.maximum(inventory - np.bincount(choice, weights=got, minlength=F), 0.0)
    s.hh_account -= spent
    s.firm_liquidity += revenue
    settle(s, cfg, s.hh_bank, spent, -1)
    settle(s, cfg, s.firm_bank, revenue, +1)
    s.firm_sales = sold
    s.firm_revenue = revenue
    return sold
