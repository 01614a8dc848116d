"""DebtRank on liability networks.

Distress ``h`` in [0, 1] flows from a defaulting debtor to its creditors
through the impact matrix ``W[i, j] = min(1, L[i, j] / C[j])``.  Each node
passes its distress on exactly once (undistressed -> distressed -> inactive),
so a cascade ends after at most ``B`` sweeps.  All single-seed runs of a
profile are propagated together as rows of one ``(seeds, B)`` array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .network import LiabilityNetwork

ValueWeights = Literal["liabilities", "assets"]


@dataclass(frozen=True)
class EconomicValues:
    v: np.ndarray
    V_total: float
    weights: str = "liabilities"

    @property
    def degenerate(self) -> bool:
        return self.V_total == 0


@dataclass(frozen=True)
class RiskProfile:
    R: np.ndarray
    values: EconomicValues
    iterations_used: int

    @property
    def degenerate(self) -> bool:
        return self.values.degenerate


def _as_matrix(net) -> np.ndarray:
    return net.liabilities if isinstance(net, LiabilityNetwork) else np.asarray(net, dtype=float)


def impact_matrix(net, capital) -> np.ndarray:
    """``W[i, j]``: fraction of creditor ``j``'s capital lost if ``i`` defaults."""
    L = _as_matrix(net)
    C = np.asarray(capital, dtype=float)
    if C.shape != (L.shape[0],):
        raise ValueError(f"capital vector has shape {C.shape}, expected ({L.shape[0]},)")
    pos = C > 0
    W = np.where(L > 0, 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.minimum(1.0, L / np.where(pos, C, 1.0)[None, :])
    W = np.where(pos[None, :], ratio, W)
    np.fill_diagonal(W, 0.0)
    return W


def economic_values(net, weights: ValueWeights = "liabilities") -> EconomicValues:
    """Per-node share of total interbank volume ``V = sum(L)``.

    ``liabilities`` weights node i by what it owes (row sums), ``assets`` by
    what it is owed (column sums).  Both total to V.
    """
    L = _as_matrix(net)
    V = float(L.sum())
    if weights == "liabilities":
        part = L.sum(axis=1)
    elif weights == "assets":
        part = L.sum(axis=0)
    else:
        raise ValueError(f"unknown value weights {weights!r}")
    if V == 0:
        return EconomicValues(np.zeros(L.shape[0]), 0.0, weights)
    return EconomicValues(part / V, V, weights)


def propagate(W: np.ndarray, h0: np.ndarray) -> tuple[np.ndarray, int]:
    """Run the distress recursion for every row of ``h0`` at once.

    Returns the final distress levels and the number of sweeps performed.
    """
    h = np.array(h0, dtype=float, copy=True)
    distressed = h > 0
    inactive = np.zeros_like(distressed)
    sweeps = 0
    while distressed.any():
        h = np.minimum(1.0, h + (h * distressed) @ W)
        inactive = inactive | distressed
        distressed = (h > 0) & ~inactive
        sweeps += 1
    return h, sweeps


def debtrank(net, capital, values: EconomicValues, seed, psi: float = 1.0) -> float:
    """DebtRank of a single seed node, or of a seed set when ``seed`` is a sequence."""
    W = impact_matrix(net, capital)
    B = W.shape[0]
    h0 = np.zeros((1, B))
    seeds = np.atleast_1d(np.asarray(seed, dtype=int))
    if ((seeds < 0) | (seeds >= B)).any():
        raise IndexError(f"seed {seed} out of range for {B} banks")
    h0[0, seeds] = psi
    h, _ = propagate(W, h0)
    return float(h[0] @ values.v - h0[0] @ values.v)


def risk_profile(net, capital, weights: ValueWeights = "liabilities",
                 values: Optional[EconomicValues] = None,
                 W: Optional[np.ndarray] = None) -> RiskProfile:
    """DebtRank of every node as a single seed.

    Pass ``values`` to hold the economic weights fixed (e.g. those of a base
    network when comparing hypothetical variants of it).
    """
    if values is None:
        values = economic_values(net, weights)
    if W is None:
        W = impact_matrix(net, capital)
    B = W.shape[0]
    if values.degenerate:
        return RiskProfile(np.zeros(B), values, 0)
    h0 = np.eye(B)
    h, sweeps = propagate(W, h0)
    R = h @ values.v - values.v
    return RiskProfile(R, values, sweeps)


def rank_order(R: Sequence[float]) -> np.ndarray:
    """Indices ordered from most to least risky, ties by index."""
    R = np.asarray(R)
    return np.lexsort((np.arange(len(R)), -R))
