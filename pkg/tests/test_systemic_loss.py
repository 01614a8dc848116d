import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_debtrank, liability_weights, quad_discount_mass
from srtlab.debtrank import EconomicValues, risk_profile
from srtlab.network import LiabilityNetwork, LoanRecord, with_loan, without_loan
from srtlab.systemic_loss import (
    DefaultModel,
    discount_mass,
    expected_loss_node,
    expected_loss_total,
    loan_term_years,
    marginal_liability_effect,
    marginal_loan_effect,
    srt_quote,
)

CHAIN = [[0, 10, 0], [0, 0, 10], [0, 0, 0]]
CHAIN_C = [5.0, 5.0, 20.0]


def test_default_model_hazard():
    m = DefaultModel.uniform(3, 0.01)
    np.testing.assert_allclose(np.exp(-m.hazard), 1 - m.p_def, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        DefaultModel.uniform(2, 1.0)
    with pytest.raises(ValueError):
        DefaultModel.uniform(2, 0.1, discount_rate=-0.1)


def test_expected_loss_node_arithmetic():
    prof = risk_profile(LiabilityNetwork.empty(2), [1, 1])
    prof = type(prof)(np.array([0.5, 0.0]), EconomicValues(np.array([0.5, 0.5]), 100.0), 1)
    m = DefaultModel.uniform(2, 0.01)
    assert expected_loss_node(prof, m, 0) == pytest.approx(0.5)
    assert expected_loss_node(prof, m, 1) == 0


def test_expected_loss_total_chain_against_summation():
    net = LiabilityNetwork.from_matrix(CHAIN)
    prof = risk_profile(net, CHAIN_C)
    m = DefaultModel.uniform(3, 0.01)
    v, V = liability_weights(CHAIN)
    oracle = 0.0
    for i in range(3):
        oracle += 0.01 * V * brute_debtrank(CHAIN, CHAIN_C, v, i)
    assert expected_loss_total(prof, m) == pytest.approx(oracle, abs=1e-14)
    assert expected_loss_total(prof, m) == pytest.approx(0.1)


def test_expected_loss_total_zero_and_linear():
    m = DefaultModel.uniform(3, 0.01)
    assert expected_loss_total(risk_profile(LiabilityNetwork.empty(3), np.ones(3)), m) == 0
    L = np.array(CHAIN, float)
    base = expected_loss_total(risk_profile(L, CHAIN_C), m)
    scaled = expected_loss_total(risk_profile(3 * L, 3 * np.array(CHAIN_C)), m)
    assert scaled == pytest.approx(3 * base)
    m2 = DefaultModel(np.array([0.02, 0.01, 0.01]))
    assert expected_loss_total(risk_profile(L, CHAIN_C), m2) == pytest.approx(2 * base)


def test_marginal_liability_zero_edge():
    net = LiabilityNetwork.from_matrix(CHAIN)
    assert marginal_liability_effect(net, CHAIN_C, DefaultModel.uniform(3, 0.01), 2, 0) == 0


def test_marginal_liability_two_banks():
    net = LiabilityNetwork.from_matrix([[0, 10], [0, 0]])
    vals = EconomicValues(np.array([0.5, 0.5]), 10.0)
    d = marginal_liability_effect(net, [5.0, 5.0], DefaultModel.uniform(2, 0.01), 0, 1, values=vals)
    assert d == pytest.approx(-0.05, abs=1e-15)


def _saturated_net(rng, B):
    # every exposure at least wipes out its creditor, so propagation is monotone
    L = rng.uniform(1, 10, size=(B, B)) * (rng.random((B, B)) < 0.5)
    np.fill_diagonal(L, 0)
    C = rng.uniform(0.1, 1.0, size=B)
    return LiabilityNetwork.from_matrix(L), C


def test_marginal_liability_nonpositive_saturated():
    rng = np.random.default_rng(4)
    m = DefaultModel.uniform(4, 0.01)
    for _ in range(30):
        net, C = _saturated_net(rng, 4)
        for i, j in np.argwhere(net.liabilities > 0):
            assert marginal_liability_effect(net, C, m, int(i), int(j)) <= 0


def test_marginal_liability_sign_rate_on_general_networks():
    # Outside the saturated class a removal can raise some R (see the
    # counterexample in test_debtrank); it stays the rare exception.
    rng = np.random.default_rng(5)
    m = DefaultModel.uniform(4, 0.01)
    total = positive = 0
    for _ in range(100):
        L = rng.uniform(0, 10, size=(4, 4)) * (rng.random((4, 4)) < 0.6)
        np.fill_diagonal(L, 0)
        C = rng.uniform(1, 20, size=4)
        net = LiabilityNetwork.from_matrix(L)
        for i, j in np.argwhere(L > 0):
            total += 1
            positive += marginal_liability_effect(net, C, m, int(i), int(j)) > 1e-15
    assert positive / total < 0.1


def test_single_loan_edge_matches_liability_effect():
    net = LiabilityNetwork.from_loans(3, [LoanRecord(0, 0, 1, 10.0), LoanRecord(1, 1, 2, 10.0)])
    m = DefaultModel.uniform(3, 0.01)
    a = marginal_loan_effect(net, CHAIN_C, m, 0, "remove")
    b = marginal_liability_effect(net, CHAIN_C, m, 0, 1)
    assert a == b


def test_add_then_remove_sums_to_zero():
    net = LiabilityNetwork.from_matrix(CHAIN)
    m = DefaultModel.uniform(3, 0.01)
    loan = LoanRecord(99, 2, 0, 4.0)
    base = risk_profile(net, CHAIN_C)
    add = marginal_loan_effect(net, CHAIN_C, m, direction="add", loan=loan, values=base.values)
    rem = marginal_loan_effect(with_loan(net, loan), CHAIN_C, m, 99, "remove", values=base.values)
    assert add + rem == 0.0


def test_loan_effect_bounded_by_edge_effect_saturated():
    rng = np.random.default_rng(8)
    m = DefaultModel.uniform(4, 0.01)
    for trial in range(20):
        net, C = _saturated_net(rng, 4)
        extra = [LoanRecord(1000 + k, int(l.debtor), int(l.creditor), 0.5)
                 for k, l in enumerate(net.loans)]
        for loan in extra:
            net = with_loan(net, loan)
        base = risk_profile(net, C)
        for loan in extra:
            e_loan = marginal_loan_effect(net, C, m, loan.loan_id, "remove", base=base)
            e_edge = marginal_liability_effect(net, C, m, loan.debtor, loan.creditor, base=base)
            assert abs(e_loan) <= abs(e_edge) + 1e-15


def test_removal_plus_readding_is_exactly_zero():
    rng = np.random.default_rng(21)
    m = DefaultModel.uniform(5, 0.01)
    L = rng.uniform(0, 10, size=(5, 5)) * (rng.random((5, 5)) < 0.6)
    np.fill_diagonal(L, 0)
    C = rng.uniform(1, 20, size=5)
    net = LiabilityNetwork.from_matrix(L)
    loans = [LoanRecord(100 + k, 0, 1, float(x)) for k, x in enumerate(rng.uniform(1, 5, 3))]
    for l in loans:
        net = with_loan(net, l)
    base = risk_profile(net, C)
    removed = net
    for l in net.loans_between(0, 1):
        removed = without_loan(removed, l.loan_id)
    d_remove = marginal_liability_effect(net, C, m, 0, 1, base=base)
    readded = removed
    for l in net.loans_between(0, 1):
        readded = with_loan(readded, l)
    assert np.array_equal(readded.liabilities, net.liabilities)
    other = risk_profile(removed, C, values=base.values)
    back = risk_profile(readded, C, values=base.values)
    d_readd = float(np.sum(m.p_def * base.values.V_total * (back.R - other.R)))
    assert d_remove + d_readd == 0.0


# --- SRT quotes ---------------------------------------------------------------

def _one_edge_quote(zeta=0.02, T=1.0, r=0.0, principal=10.0, p=0.01):
    net = LiabilityNetwork.empty(2)
    vals = EconomicValues(np.array([0.5, 0.5]), 100.0)
    m = DefaultModel.uniform(2, p, discount_rate=r)
    return srt_quote(net, [1.0, 1.0], m, LoanRecord(0, 0, 1, principal), T, zeta, values=vals)


def test_srt_worked_example():
    q = _one_edge_quote()
    assert q.delta_R[0] == pytest.approx(0.5)
    h = -math.log(0.99)
    assert quad_discount_mass(h, 0.0, 1.0) == pytest.approx(0.01, rel=1e-9)
    assert q.tax == pytest.approx(0.02 * 100 * 0.5 * 0.01, rel=1e-12)


def test_srt_zero_for_risk_neutral_loan():
    # lender owes nobody: its distress goes nowhere and is worth nothing
    net = LiabilityNetwork.from_matrix(CHAIN)
    m = DefaultModel.uniform(3, 0.01)
    q = srt_quote(net, CHAIN_C, m, LoanRecord(50, 0, 2, 3.0), 1.0, 0.02)
    assert not q.delta_R.any()
    assert q.tax == 0.0


def test_srt_argument_errors():
    net = LiabilityNetwork.from_matrix(CHAIN)
    m = DefaultModel.uniform(3, 0.01)
    loan = LoanRecord(50, 0, 2, 3.0)
    for T, z in [(0.0, 0.02), (-1, 0.02), (1.0, 0.0), (1.0, 1.5)]:
        with pytest.raises(ValueError):
            srt_quote(net, CHAIN_C, m, loan, T, z)


@pytest.mark.parametrize("p,T", [(0.01, 1.0), (0.001, 5.0), (0.005, 2.0), (0.0001, 30.0)])
def test_srt_taylor_limit(p, T):
    q = _one_edge_quote(p=p, T=T)
    approx = 0.02 * 100 * 0.5 * p * T
    assert q.tax == pytest.approx(approx, rel=0.01)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(1e-3, 30.0))
def test_discount_mass_matches_quadrature(h, r, T):
    exact = discount_mass(h, r, T)
    ref = quad_discount_mass(h, r, T)
    if ref == 0:
        assert exact == 0
    else:
        assert abs(exact - ref) <= 1e-9 * ref


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.1, 10), st.floats(0.1, 10),
       st.floats(0.0, 0.3))
def test_srt_monotone_in_zeta_term_principal(z1, z2, T1, T2, r):
    lo_z, hi_z = sorted((z1, z2))
    lo_T, hi_T = sorted((T1, T2))
    assert _one_edge_quote(zeta=lo_z, r=r).tax <= _one_edge_quote(zeta=hi_z, r=r).tax
    assert _one_edge_quote(T=lo_T, r=r).tax <= _one_edge_quote(T=hi_T, r=r).tax
    # principal matters through W = min(1, L/C) on an unsaturated creditor
    net = LiabilityNetwork.from_matrix(CHAIN)
    m = DefaultModel.uniform(3, 0.01, discount_rate=r)
    small = srt_quote(net, CHAIN_C, m, LoanRecord(9, 2, 1, lo_T), 1.0, 0.5)
    big = srt_quote(net, CHAIN_C, m, LoanRecord(9, 2, 1, hi_T), 1.0, 0.5)
    assert 0 <= small.tax <= big.tax


def test_loan_term_years():
    assert loan_term_years(0.05, 20) == 1.0
    assert loan_term_years(0.1, 20) == 0.5
    assert loan_term_years(0.01, 20, cap_years=2.0) == 2.0
