import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srtlab.network import (
    BankSheet,
    LiabilityNetwork,
    LoanRecord,
    NetworkError,
    remove_liability,
    replace_principals,
    total_volume,
    with_loan,
    without_loan,
)


def random_ledger(rng, B, n_loans, start_id=0):
    loans = []
    for k in range(n_loans):
        i, j = rng.choice(B, size=2, replace=False)
        loans.append(LoanRecord(start_id + k, int(i), int(j), float(rng.uniform(0.1, 50))))
    return loans


def test_remove_liability_two_banks():
    net = LiabilityNetwork.from_matrix([[0, 10], [0, 0]])
    out = remove_liability(net, 0, 1)
    assert not out.liabilities.any()
    assert len(out) == 0
    assert net.liabilities[0, 1] == 10  # input untouched


def test_remove_zero_liability_is_identity():
    net = LiabilityNetwork.from_matrix([[0, 10], [0, 0]])
    out = remove_liability(net, 1, 0)
    np.testing.assert_array_equal(out.liabilities, net.liabilities)
    assert out.loans == net.loans


def test_remove_liability_against_naive_copy():
    rng = np.random.default_rng(3)
    L = rng.uniform(0, 10, size=(3, 3))
    np.fill_diagonal(L, 0)
    net = LiabilityNetwork.from_matrix(L)
    naive = L.copy()
    naive[0, 1] = 0.0
    np.testing.assert_array_equal(remove_liability(net, 0, 1).liabilities, naive)


@pytest.mark.parametrize("m,n", [(0, 0), (-1, 1), (0, 3)])
def test_remove_liability_bad_index(m, n):
    net = LiabilityNetwork.empty(3)
    with pytest.raises(NetworkError):
        remove_liability(net, m, n)


def test_without_single_loan():
    net = LiabilityNetwork.from_loans(2, [LoanRecord(7, 1, 0, 5.0)])
    assert not without_loan(net, 7).liabilities.any()


def test_with_zero_principal_loan():
    net = LiabilityNetwork.from_loans(2, [LoanRecord(7, 1, 0, 5.0)])
    out = with_loan(net, LoanRecord(8, 0, 1, 0.0))
    np.testing.assert_array_equal(out.liabilities, net.liabilities)


def test_unknown_loan():
    with pytest.raises(NetworkError):
        without_loan(LiabilityNetwork.empty(2), 3)


def test_self_loan_rejected():
    with pytest.raises(NetworkError):
        LoanRecord(0, 1, 1, 1.0)
    with pytest.raises(NetworkError):
        LiabilityNetwork.from_matrix([[1.0, 0], [0, 0]])


def test_round_trip_random_ledger():
    rng = np.random.default_rng(11)
    net = LiabilityNetwork.from_loans(4, random_ledger(rng, 4, 25))
    for loan in net.loans:
        back = with_loan(without_loan(net, loan.loan_id), loan)
        assert np.array_equal(back.liabilities, net.liabilities)
        assert back.loans == net.loans


def test_total_volume():
    assert total_volume(LiabilityNetwork.empty(3)) == 0
    assert total_volume(LiabilityNetwork.from_matrix([[0, 10], [5, 0]])) == 15
    rng = np.random.default_rng(5)
    L = rng.uniform(0, 3, size=(6, 6))
    np.fill_diagonal(L, 0)
    naive = 0.0
    for i in range(6):
        for j in range(6):
            naive += L[i, j]
    assert total_volume(LiabilityNetwork.from_matrix(L)) == pytest.approx(naive, abs=1e-12)


def test_replace_principals_drops_zero():
    net = LiabilityNetwork.from_loans(3, [LoanRecord(0, 0, 1, 4.0), LoanRecord(1, 0, 1, 2.0)])
    out = replace_principals(net, {0: 0.0, 1: 1.5})
    assert [l.loan_id for l in out.loans] == [1]
    assert out.liabilities[0, 1] == 1.5


def test_bank_sheet_invariants():
    with pytest.raises(NetworkError):
        BankSheet(capital=1.0, default_probability=1.0)
    with pytest.raises(NetworkError):
        BankSheet(capital=1.0, total_assets=5.0, due_from_banks=6.0)
    BankSheet(capital=1.0, total_assets=5.0, due_from_banks=5.0)


ops = st.lists(
    st.tuples(st.sampled_from(["add", "drop", "edge"]), st.integers(0, 4), st.integers(0, 4),
              st.floats(0.0, 100.0, allow_nan=False)),
    max_size=30,
)


@settings(max_examples=150, deadline=None)
@given(ops)
def test_ledger_consistency_under_random_operations(seq):
    net = LiabilityNetwork.empty(5)
    next_id = 0
    for op, a, b, x in seq:
        before = total_volume(net)
        if op == "add" and a != b:
            loan = LoanRecord(next_id, a, b, x)
            next_id += 1
            net = with_loan(net, loan)
            assert total_volume(net) == pytest.approx(before + x, rel=1e-12, abs=1e-9)
        elif op == "drop" and len(net):
            ids = [l.loan_id for l in net.loans]
            net = without_loan(net, ids[(a * 5 + b) % len(ids)])
        elif op == "edge" and a != b:
            stepwise = net
            for loan in net.loans_between(a, b):
                stepwise = without_loan(stepwise, loan.loan_id)
            net = remove_liability(net, a, b)
            np.testing.assert_array_equal(net.liabilities, stepwise.liabilities)
        net.check_consistency()
        assert (net.liabilities >= 0).all()
        assert not np.diag(net.liabilities).any()
