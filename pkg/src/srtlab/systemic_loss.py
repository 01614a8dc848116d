"""Expected systemic loss, marginal effects of liabilities and loans, SRT quotes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .debtrank import EconomicValues, RiskProfile, economic_values, risk_profile
from .network import LiabilityNetwork, LoanRecord, remove_liability, with_loan, without_loan


@dataclass(frozen=True)
class DefaultModel:
    """Constant-hazard default model derived from annual default probabilities."""

    p_def: np.ndarray
    discount_rate: float = 0.0
    steps_per_year: int = 20

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p_def, dtype=float))
        if ((p < 0) | (p >= 1)).any():
            raise ValueError("default probabilities must lie in [0, 1)")
        if self.discount_rate < 0:
            raise ValueError("discount_rate must be >= 0")
        if self.steps_per_year <= 0:
            raise ValueError("steps_per_year must be positive")
        object.__setattr__(self, "p_def", p)

    @classmethod
    def uniform(cls, n_banks: int, p: float, **kw) -> "DefaultModel":
        return cls(np.full(n_banks, float(p)), **kw)

    @property
    def hazard(self) -> np.ndarray:
        return -np.log1p(-self.p_def)


def discount_mass(hazard, rate: float, T: float):
    """Discounted default mass ``int_0^T e^{-r t} h e^{-h t} dt`` in closed form."""
    h = np.asarray(hazard, dtype=float)
    k = h + rate
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(k > 0, h / k * -np.expm1(-k * T), 0.0)
    return out if out.ndim else float(out)


def expected_loss_node(profile: RiskProfile, model: DefaultModel, i: int) -> float:
    return float(model.p_def[i] * profile.values.V_total * profile.R[i])


def expected_loss_total(profile: RiskProfile, model: DefaultModel) -> float:
    return float(np.sum(model.p_def * profile.values.V_total * profile.R))


def _delta_el(base: RiskProfile, other: RiskProfile, model: DefaultModel) -> float:
    V = base.values.V_total
    return float(np.sum(model.p_def * V * (other.R - base.R)))


def _base(net, capital, values, base):
    if base is not None:
        return base
    if values is None:
        values = economic_values(net)
    return risk_profile(net, capital, values=values)


def marginal_liability_effect(net: LiabilityNetwork, capital, model: DefaultModel, m: int, n: int,
                              values: Optional[EconomicValues] = None,
                              base: Optional[RiskProfile] = None) -> float:
    """Change in total expected systemic loss when liability (m, n) is removed.

    Negative means the liability adds systemic risk.  Economic weights and V
    are those of ``net`` unless ``values`` overrides them.
    """
    if net.liabilities[m, n] == 0:
        return 0.0
    base = _base(net, capital, values, base)
    other = risk_profile(remove_liability(net, m, n), capital, values=base.values)
    return _delta_el(base, other, model)


def marginal_loan_effect(net: LiabilityNetwork, capital, model: DefaultModel, k: Optional[int] = None,
                         direction: Literal["remove", "add"] = "remove",
                         loan: Optional[LoanRecord] = None,
                         values: Optional[EconomicValues] = None,
                         base: Optional[RiskProfile] = None) -> float:
    """Change in total expected systemic loss from removing loan ``k`` or adding ``loan``."""
    if direction == "remove":
        if k is None:
            raise ValueError("direction='remove' needs a loan id")
        other_net = without_loan(net, k)
    elif direction == "add":
        if loan is None:
            raise ValueError("direction='add' needs a loan")
        other_net = with_loan(net, loan)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    base = _base(net, capital, values, base)
    other = risk_profile(other_net, capital, values=base.values)
    return _delta_el(base, other, model)


@dataclass(frozen=True)
class SrtQuote:
    debtor: int
    creditor: int
    principal: float
    term: float
    delta_R: np.ndarray
    tax: float
    zeta: float
    discount_rate: float = 0.0

    def as_dict(self) -> dict:
        return {
            "debtor": self.debtor,
            "creditor": self.creditor,
            "principal": self.principal,
            "term_years": self.term,
            "zeta": self.zeta,
            "discount_rate": self.discount_rate,
            "discounting": "continuous",
            "delta_R": [float(x) for x in self.delta_R],
            "tax": self.tax,
        }


def srt_quote(net: LiabilityNetwork, capital, model: DefaultModel, prospective: LoanRecord,
              term_years: float, zeta: float,
              values: Optional[EconomicValues] = None,
              base: Optional[RiskProfile] = None) -> SrtQuote:
    """Systemic risk tax for booking ``prospective`` on top of ``net``.

    DebtRanks of both networks are taken now, with the economic weights and
    V of ``net``; the discounted default mass over the loan term multiplies
    the increase, and only a positive total is taxed.
    """
    if not term_years > 0:
        raise ValueError(f"term must be positive, got {term_years}")
    if not 0 < zeta <= 1:
        raise ValueError(f"zeta must lie in (0, 1], got {zeta}")
    if prospective.debtor == prospective.creditor:
        raise ValueError("debtor and creditor must differ")
    base = _base(net, capital, values, base)
    after = risk_profile(with_loan(net, prospective), capital, values=base.values)
    dR = after.R - base.R
    D = discount_mass(model.hazard, model.discount_rate, term_years)
    total = float(np.sum(dR * base.values.V_total * D))
    tax = zeta * max(0.0, total)
    return SrtQuote(prospective.debtor, prospective.creditor, prospective.principal_outstanding,
                    float(term_years), dR, tax, float(zeta), model.discount_rate)


def loan_term_years(tau: float, steps_per_year: int, cap_years: float = 1.0) -> float:
    """Quote horizon for a loan amortizing a fraction ``tau`` per step."""
    horizon_steps = math.inf if tau <= 0 else 1.0 / tau
    return min(horizon_steps / steps_per_year, cap_years)
