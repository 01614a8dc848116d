"""Economy state: households, firms, banks, open loans and the bailout fund."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..network import LiabilityNetwork, LoanRecord
from .config import ModelConfig


class FirmLoanBook:
    """Open firm loans as parallel arrays."""

    def __init__(self):
        self.firm = np.zeros(0, dtype=int)
        self.bank = np.zeros(0, dtype=int)
        self.principal = np.zeros(0)
        self.notional = np.zeros(0)
        self.rate = np.zeros(0)

    def __len__(self):
        return len(self.firm)

    def add(self, firm: int, bank: int, principal: float, rate: float) -> None:
        self.firm = np.append(self.firm, firm)
        self.bank = np.append(self.bank, bank)
        self.principal = np.append(self.principal, principal)
        self.notional = np.append(self.notional, principal)
        self.rate = np.append(self.rate, rate)

    def keep(self, mask: np.ndarray) -> None:
        self.firm = self.firm[mask]
        self.bank = self.bank[mask]
        self.principal = self.principal[mask]
        self.notional = self.notional[mask]
        self.rate = self.rate[mask]

    def debt_by_firm(self, F: int) -> np.ndarray:
        return np.bincount(self.firm, weights=self.principal, minlength=F)

    def debt_by_bank(self, B: int) -> np.ndarray:
        return np.bincount(self.bank, weights=self.principal, minlength=B)

    def copy(self) -> "FirmLoanBook":
        out = FirmLoanBook()
        out.firm, out.bank = self.firm.copy(), self.bank.copy()
        out.principal, out.rate = self.principal.copy(), self.rate.copy()
        out.notional = self.notional.copy()
        return out


@dataclass
class EconomyState:
    t: int
    # households
    hh_account: np.ndarray
    hh_bank: np.ndarray
    hh_employer: np.ndarray  # firm index, -1 unemployed; owners never work
    hh_is_owner: np.ndarray
    # firms
    firm_liquidity: np.ndarray
    firm_price: np.ndarray
    firm_demand: np.ndarray  # expected demand d_i
    firm_output: np.ndarray
    firm_sales: np.ndarray  # quantity sold last goods market
    firm_revenue: np.ndarray
    firm_workers: np.ndarray
    firm_owner: np.ndarray
    firm_bank: np.ndarray  # bank holding the firm's account
    firm_loans: FirmLoanBook
    # banks
    bank_capital: np.ndarray
    bank_liquidity: np.ndarray
    bank_defaulted: np.ndarray
    ib_loans: dict = field(default_factory=dict)  # loan_id -> LoanRecord
    bailout_fund: float = 0.0
    next_loan_id: int = 0
    new_ib_loans: list = field(default_factory=list)  # originated in the current step
    ib_volume_by_step: dict = field(default_factory=dict)  # step -> principal originated
    _net: Optional[LiabilityNetwork] = field(default=None, repr=False)

    @property
    def B(self) -> int:
        return len(self.bank_capital)

    @property
    def F(self) -> int:
        return len(self.firm_liquidity)

    def network(self) -> LiabilityNetwork:
        if self._net is None:
            self._net = LiabilityNetwork.from_loans(self.B, self.ib_loans.values())
        return self._net

    def set_ib_loans(self, loans: dict) -> None:
        self.ib_loans = loans
        self._net = None

    def book_ib_loan(self, loan: LoanRecord, net_after: Optional[LiabilityNetwork] = None) -> None:
        self.ib_loans[loan.loan_id] = loan
        self._net = net_after

    def deposits(self) -> np.ndarray:
        d = np.bincount(self.hh_bank, weights=self.hh_account, minlength=self.B)
        d += np.bincount(self.firm_bank, weights=self.firm_liquidity, minlength=self.B)
        return d

    def total_cash(self) -> float:
        return float(self.hh_account.sum() + self.firm_liquidity.sum()
                     + self.bank_liquidity.sum() + self.bailout_fund)

    def ib_due_from(self) -> np.ndarray:
        """Interbank assets per bank (what others owe it)."""
        return self.network().liabilities.sum(axis=0)

    def ib_due_to(self) -> np.ndarray:
        return self.network().liabilities.sum(axis=1)


def init_state(cfg: ModelConfig, rng: np.random.Generator) -> EconomyState:
    """Symmetric start: equal banks, equal households, identical firms."""
    B, F, H = cfg.B, cfg.F, cfg.H
    owner = np.zeros(H, dtype=bool)
    owner[:F] = True
    hh_account = np.full(H, float(cfg.household_account))
    if cfg.bank_size_exponent > 0:
        weight = rng.permutation(np.arange(1, B + 1, dtype=float) ** -cfg.bank_size_exponent)
        weight /= weight.sum()
        hh_bank = rng.choice(B, size=H, p=weight)
        firm_bank = rng.choice(B, size=F, p=weight)
    else:
        hh_bank = rng.integers(0, B, size=H)
        firm_bank = rng.integers(0, B, size=F)
    workers_each = (H - F) // F
    hh_employer = np.full(H, -1)
    hh_employer[F:F + workers_each * F] = np.repeat(np.arange(F), workers_each)
    firm_workers = np.bincount(hh_employer[hh_employer >= 0], minlength=F)
    output = cfg.alpha * firm_workers.astype(float)
    state = EconomyState(
        t=0,
        hh_account=hh_account,
        hh_bank=hh_bank,
        hh_employer=hh_employer,
        hh_is_owner=owner,
        firm_liquidity=np.full(F, float(cfg.firm_liquidity)),
        firm_price=np.full(F, float(cfg.price)),
        firm_demand=output.copy(),
        firm_output=output.copy(),
        firm_sales=output.copy(),
        firm_revenue=output * cfg.price,
        firm_workers=firm_workers,
        firm_owner=np.arange(F),
        firm_bank=firm_bank,
        firm_loans=FirmLoanBook(),
        bank_capital=np.full(B, float(cfg.bank_capital)),
        bank_liquidity=np.zeros(B),
        bank_defaulted=np.zeros(B, dtype=bool),
    )
    # banks hold part of their deposits as cash, plus their own cash
    state.bank_liquidity = cfg.initial_cash_ratio * state.deposits() + cfg.bank_cash
    return state
