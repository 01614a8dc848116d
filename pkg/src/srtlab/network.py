"""Liability networks, loan ledgers and bank balance sheets.

Row convention: ``liabilities[i, j]`` is what bank ``i`` owes bank ``j``
(``i`` borrowed from ``j``).  Every matrix entry is backed by the loan ledger;
the matrix is a cache rebuilt from the ledger by summing principals in
loan-id order, so removing and re-adding a loan reproduces the matrix
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

import numpy as np

LEDGER_ATOL = 1e-9


class NetworkError(ValueError):
    """Raised for invalid indices, unknown loans or inconsistent ledgers."""


@dataclass(frozen=True)
class LoanRecord:
    loan_id: int
    debtor: int
    creditor: int
    principal_outstanding: float
    rate: float = 0.0
    srt_paid: float = 0.0
    origination_step: int = 0
    notional: Optional[float] = None

    def __post_init__(self):
        if self.debtor == self.creditor:
            raise NetworkError(f"loan {self.loan_id}: debtor == creditor ({self.debtor})")
        if not self.principal_outstanding >= 0:
            raise NetworkError(
                f"loan {self.loan_id}: negative principal {self.principal_outstanding}")
        if self.notional is None:
            object.__setattr__(self, "notional", float(self.principal_outstanding))


@dataclass(frozen=True)
class BankSheet:
    capital: float
    liquidity: float = 0.0
    default_probability: float = 0.01
    total_assets: Optional[float] = None
    total_liabilities: Optional[float] = None
    due_from_banks: Optional[float] = None
    due_to_banks: Optional[float] = None
    liquid_assets: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.default_probability < 1.0:
            raise NetworkError(
                f"default_probability must lie in [0, 1), got {self.default_probability}")
        if (self.due_from_banks is not None and self.total_assets is not None
                and self.due_from_banks > self.total_assets):
            raise NetworkError("due_from_banks exceeds total_assets")


def _sum_ledger(n: int, loans: Iterable[LoanRecord]) -> np.ndarray:
    L = np.zeros((n, n))
    for loan in loans:
        # plain left-to-right accumulation; _entry() must reproduce it exactly
        L[loan.debtor, loan.creditor] += loan.principal_outstanding
    return L


@dataclass(frozen=True, eq=False)
class LiabilityNetwork:
    """Immutable snapshot of an interbank liability network.

    Use :meth:`from_loans` or :meth:`from_matrix` rather than the raw
    constructor.
    """

    n_banks: int
    _loans: Mapping[int, LoanRecord] = field(repr=False)
    _matrix: np.ndarray = field(repr=False)

    @classmethod
    def from_loans(cls, n_banks: int, loans: Iterable[LoanRecord]) -> "LiabilityNetwork":
        if n_banks <= 0:
            raise NetworkError("n_banks must be positive")
        ordered: dict[int, LoanRecord] = {}
        for loan in sorted(loans, key=lambda l: l.loan_id):
            if loan.loan_id in ordered:
                raise NetworkError(f"duplicate loan id {loan.loan_id}")
            for idx in (loan.debtor, loan.creditor):
                if not 0 <= idx < n_banks:
                    raise NetworkError(f"bank index {idx} out of range for {n_banks} banks")
            ordered[loan.loan_id] = loan
        L = _sum_ledger(n_banks, ordered.values())
        L.setflags(write=False)
        return cls(n_banks, ordered, L)

    @classmethod
    def from_matrix(cls, L, *, first_id: int = 0) -> "LiabilityNetwork":
        """One synthetic loan per nonzero entry, ids assigned row-major."""
        L = np.asarray(L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise NetworkError(f"liability matrix must be square, got shape {L.shape}")
        if (L < 0).any():
            raise NetworkError("liability matrix has negative entries")
        if np.diag(L).any():
            raise NetworkError("liability matrix has self-loans on the diagonal")
        loans = []
        k = first_id
        for i, j in zip(*np.nonzero(L)):
            loans.append(LoanRecord(k, int(i), int(j), float(L[i, j])))
            k += 1
        return cls.from_loans(L.shape[0], loans)

    @classmethod
    def empty(cls, n_banks: int) -> "LiabilityNetwork":
        return cls.from_loans(n_banks, [])

    @property
    def liabilities(self) -> np.ndarray:
        return self._matrix

    @property
    def loans(self) -> tuple[LoanRecord, ...]:
        return tuple(self._loans.values())

    def loan(self, loan_id: int) -> LoanRecord:
        try:
            return self._loans[loan_id]
        except KeyError:
            raise NetworkError(f"unknown loan id {loan_id}") from None

    def __contains__(self, loan_id) -> bool:
        return loan_id in self._loans

    def __len__(self) -> int:
        return len(self._loans)

    def loans_between(self, debtor: int, creditor: int) -> list[LoanRecord]:
        return [l for l in self._loans.values() if l.debtor == debtor and l.creditor == creditor]

    def _check_index(self, *idx: int) -> None:
        for i in idx:
            if not 0 <= i < self.n_banks:
                raise NetworkError(f"bank index {i} out of range for {self.n_banks} banks")

    def _rebuilt(self, loans: dict[int, LoanRecord], touched: set[tuple[int, int]]):
        L = self._matrix.copy()
        for (i, j) in touched:
            acc = 0.0
            for l in loans.values():
                if l.debtor == i and l.creditor == j:
                    acc += l.principal_outstanding
            L[i, j] = acc
        L.setflags(write=False)
        return LiabilityNetwork(self.n_banks, loans, L)

    def check_consistency(self, atol: float = LEDGER_ATOL) -> None:
        """Raise if the cached matrix disagrees with the ledger."""
        ref = _sum_ledger(self.n_banks, self._loans.values())
        if np.diag(self._matrix).any():
            raise NetworkError("nonzero diagonal")
        if (self._matrix < 0).any():
            raise NetworkError("negative liability entry")
        bad = np.abs(ref - self._matrix) > atol
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            raise NetworkError(
                f"ledger/matrix mismatch at ({i},{j}): {ref[i, j]} vs {self._matrix[i, j]}")


def remove_liability(net: LiabilityNetwork, m: int, n: int) -> LiabilityNetwork:
    """Network with entry (m, n) zeroed and every m->n loan dropped."""
    net._check_index(m, n)
    if m == n:
        raise NetworkError("remove_liability needs m != n")
    loans = {k: l for k, l in net._loans.items() if not (l.debtor == m and l.creditor == n)}
    return net._rebuilt(loans, {(m, n)})


def without_loan(net: LiabilityNetwork, loan_id: int) -> LiabilityNetwork:
    loan = net.loan(loan_id)
    loans = dict(net._loans)
    del loans[loan_id]
    out = net._rebuilt(loans, {(loan.debtor, loan.creditor)})
    if out._matrix[loan.debtor, loan.creditor] < -LEDGER_ATOL:
        raise NetworkError(f"removing loan {loan_id} leaves a negative entry")
    return out


def with_loan(net: LiabilityNetwork, loan: LoanRecord) -> LiabilityNetwork:
    net._check_index(loan.debtor, loan.creditor)
    if loan.loan_id in net._loans:
        raise NetworkError(f"loan id {loan.loan_id} already booked")
    loans = dict(net._loans)
    loans[loan.loan_id] = loan
    if net._loans and loan.loan_id < next(reversed(net._loans)):
        loans = dict(sorted(loans.items()))
    return net._rebuilt(loans, {(loan.debtor, loan.creditor)})


def replace_principals(net: LiabilityNetwork, principals: Mapping[int, float]) -> LiabilityNetwork:
    """Rebuild with updated outstanding principals; ids mapped to 0 are dropped."""
    loans = []
    for k, l in net._loans.items():
        p = principals.get(k, l.principal_outstanding)
        if p > 0:
            loans.append(replace(l, principal_outstanding=p))
    return LiabilityNetwork.from_loans(net.n_banks, loans)


def total_volume(net: LiabilityNetwork) -> float:
    return float(net.liabilities.sum())
