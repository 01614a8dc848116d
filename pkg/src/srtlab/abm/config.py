"""Model configuration.

Rates are annual; a loan amortizing a fraction ``tau`` per step lives about
``1 / tau`` steps, which with the defaults is one year (``steps_per_year``).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Literal

TaxMode = Literal["none", "srt", "ftt"]
TAX_MODES = ("none", "srt", "ftt")


@dataclass(frozen=True)
class ModelConfig:
    # population
    B: int = 20
    F: int = 100
    H: int = 1300
    steps: int = 500

    # policy
    tax_mode: TaxMode = "none"
    zeta: float = 0.02
    srt_full: bool = False
    ftt_rate: float = 0.002
    p_def: float = 0.01
    value_weights: Literal["liabilities", "assets"] = "liabilities"
    discount_rate: float = 0.0
    steps_per_year: int = 20
    term_cap_years: float = 1.0

    # households and firms
    w: float = 1.0
    alpha: float = 0.5
    c: float = 0.8
    z: int = 2
    goods_rounds: int = 3
    eta_max: float = 0.1
    nu_max: float = 0.1
    firm_payout: float = 0.5
    debt_buffer: float = 1.0

    # credit
    n: int = 2
    r_max: float = 0.0365
    phi: float = 0.8
    tau: float = 0.05
    r_base: float = 0.02
    sigma_bank: float = 0.01
    rho_coef: float = 0.01
    rho_max: float = 0.02
    fragility_eps: float = 1.0

    # interbank
    r_ib_base: float = 0.035
    sigma_ib: float = 0.002
    rho_ib_coef: float = 0.001
    rho_ib_max: float = 0.002
    reserve_ratio: float = 0.5
    settle_deposits: bool = True

    # initial endowments
    bank_size_exponent: float = 0.0  # 0: accounts assigned uniformly; >0: Zipf-weighted banks
    initial_cash_ratio: float = 0.5  # share of initial deposits a bank holds as cash
    household_account: float = 1.3
    firm_liquidity: float = 12.0
    bank_cash: float = 10.0
    bank_capital: float = 10.0
    price: float = 2.2
    bank_payout: float = 1.0

    # run control
    stop_on_first_cascade: bool = True
    volume_step: int = 100
    sample_every: int = 10
    marginal_steps: tuple = (100,)
    min_principal: float = 1e-3

    def __post_init__(self):
        if self.tax_mode not in TAX_MODES:
            raise ValueError(f"tax_mode must be one of {TAX_MODES}, got {self.tax_mode!r}")
        for name in ("B", "F", "H", "steps", "z", "goods_rounds", "n", "steps_per_year"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.H <= self.F:
            raise ValueError("need more households than firms (each firm has an owner)")
        for name in ("c", "phi", "tau", "p_def", "reserve_ratio", "firm_payout", "bank_payout",
                     "initial_cash_ratio"):
            x = getattr(self, name)
            if not 0 <= x <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {x}")
        if not 0 < self.zeta <= 1:
            raise ValueError("zeta must lie in (0, 1]")
        if self.p_def >= 1:
            raise ValueError("p_def must be < 1")
        if not isinstance(self.marginal_steps, tuple):
            object.__setattr__(self, "marginal_steps", tuple(self.marginal_steps))

    @property
    def effective_zeta(self) -> float:
        return 1.0 if self.srt_full else self.zeta

    @property
    def loan_term_years(self) -> float:
        horizon = float("inf") if self.tau <= 0 else 1.0 / self.tau
        return min(horizon / self.steps_per_year, self.term_cap_years)

    def with_mode(self, mode: str) -> "ModelConfig":
        return _replace(self, tax_mode=mode)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["marginal_steps"] = list(self.marginal_steps)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls.from_dict(json.loads(text))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _replace(cfg: ModelConfig, **kw) -> ModelConfig:
    d = cfg.to_dict()
    d.update(kw)
    return ModelConfig.from_dict(d)
