from collections import Counter
from itertools import product

from hypothesis import given, strategies as st
import numpy as np
import pytest

from multisum import AuditFailure, TermIndex, XPoly, convolution_fixpoint, normalize
from multisum.cauchy_solver import sigma_assignments
from multisum.fixtures import ALL_FIXTURES
from multisum.majorant import (
    MajorantConstants,
    MajorantSeries,
    bound_audit,
    fit_constants,
    implicit_witness,
    derivative_ratio_audit,
    composition_audit,
    m_sequence,
    majorize,
    majorize_slack,
    theta_build,
    theta_relations_audit,
)


@pytest.fixture(scope="module")
def mj():
    return theta_build(200)


def toy_constants(g_prime, m1=1.0):
    key = TermIndex.of(1, 1, u=[0])
    return MajorantConstants(1.0, 1.0, 1.0, [m1], [{key: g_prime}])


def test_majorize_trivial_cases():
    b = np.array([1.0, 0.5, 0.25])
    assert majorize(np.zeros(3), b)
    assert majorize(b, b)
    bumped = b.copy()
    bumped[1] *= 1.01
    assert not majorize(bumped, b)


def test_majorize_xpoly_uses_multinomials():
    # (x1 + x2)^2 has x1 x2 coefficient 2
    p = XPoly.from_dict({(1, 1): 2.0}, 2, 2)
    assert majorize_slack(p, [0.0, 0.0, 1.0]) == pytest.approx(1.0)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=10), st.floats(0.0, 1.0))
def test_scaled_down_series_is_majorized(b, s):
    b = np.array(b)
    assert majorize(s * b, b)


def test_theta_relations_to_order_200(mj):
    report = theta_relations_audit(mj, 200)
    assert report["max_slack"] <= 1.0 + 1e-12
    assert 0 < mj.c <= 1


def test_theta_scaling():
    base = MajorantSeries(0.3)
    scaled = base.scaled(2.0)
    assert np.allclose(scaled.coeffs(5), base.coeffs(5) / 2.0 ** np.arange(6))


def test_derivative_ratio(mj):
    report = derivative_ratio_audit(mj, ell_max=10, N=100)
    assert report["max_slack"] <= 1.0 + 1e-12
    with pytest.raises(AuditFailure):
        derivative_ratio_audit(mj, ell_max=10, N=100, B=0.5 * report["B_min"])


def test_composition_single_factor_is_identity(mj):
    report = composition_audit(mj, 1, 4)
    # n = 1: each side equals the other exactly
    assert report["max_slack"]["a"] == pytest.approx(1.0)
    assert report["max_slack"]["d"] == pytest.approx(1.0)


@pytest.mark.parametrize("n,ell", [(2, 3), (3, 4), (2, 6), (3, 6)])
def test_composition_compositions(mj, n, ell):
    report = composition_audit(mj, n, ell, N=50)
    assert max(report["max_slack"].values()) <= 1.0 + 1e-12


def test_composition_radius_factor():
    report = composition_audit(theta_build(100, R=2.0), 3, 4, N=40)
    assert max(report["max_slack"].values()) <= 1.0 + 1e-12


def test_m_sequence_anchor_and_linear_toy():
    ms = m_sequence(toy_constants(0.7, m1=1.3), 6)
    assert ms[0, 1] == 1.3
    assert ms[0, 2] == pytest.approx(0.7 * 1.3)
    zero = m_sequence(toy_constants(0.0, m1=1.3), 6)
    assert all(zero[0, ell] == 0 for ell in range(2, 7))


def test_implicit_witness_geometric():
    g, m1 = 0.6, 2.0
    wit = implicit_witness([{TermIndex.of(1, 1, u=[0]): g}], [m1], 8)
    assert np.allclose(wit.C[0], [m1 * g ** (ell - 1) for ell in range(1, 9)], rtol=1e-14)
    assert wit.radius == pytest.approx(1.0 / g, rel=0.2)
    ms = m_sequence(toy_constants(g, m1), 8)
    assert implicit_witness([{TermIndex.of(1, 1, u=[0]): g}], [m1], 8, ms).equal


def test_implicit_witness_zero_coupling():
    wit = implicit_witness([{TermIndex.of(1, 1, u=[0, 0]): 0.0}], [1.0], 5)
    assert wit.C[0][1:] == [0.0] * 4


def test_enumerator_matches_brute_force():
    keys = [TermIndex.of(2, 1, u=[0]), TermIndex.of(2, 1, u=[0, 1], p=[(1, 0)]), TermIndex.of(2, 1, p=[(0, 0)] * 2)]
    for L in range(1, 11):
        got = Counter((k, tuple(a)) for k, a in sigma_assignments(keys, L))
        brute = Counter()
        for k in keys:
            slots = k.slots()
            for ls in product(range(1, L + 1), repeat=len(slots)):
                if sum(ls) + k.degree == L:
                    brute[(k, tuple((i, j, l) for (i, j), l in zip(slots, ls)))] += 1
        assert got == brute


def audit_inputs(name, L):
    builder, ml = ALL_FIXTURES[name]
    problem = builder()
    np_ = normalize(problem)
    L = min(L, np_.order)
    k = ml.ks[0]
    mj = theta_build(200, R=problem.R1)
    cst = fit_constants(np_, k, mj)
    return np_, convolution_fixpoint(np_, k, ml.thetas[0], L), m_sequence(cst, L), cst, mj, L


@pytest.mark.parametrize("name", sorted(ALL_FIXTURES))
def test_witness_equals_m_sequence(name):
    _, _, ms, cst, _, L = audit_inputs(name, 12)
    wit = implicit_witness(cst.G_prime, cst.M1, L, ms)
    assert wit.equal
    assert wit.max_rel_diff <= 1e-9


@pytest.mark.parametrize("name", sorted(ALL_FIXTURES))
def test_bound_audit_passes(name):
    _, graded, ms, _, mj, _ = audit_inputs(name, 10)
    report = bound_audit(graded, ms, mj)
    assert not report["failures"]
    assert report["max_slack"] <= 1.0 + 1e-12


def test_bound_audit_detects_halved_bounds():
    caught = []
    for name in sorted(ALL_FIXTURES):
        _, graded, ms, cst, mj, _ = audit_inputs(name, 10)
        if not any(cst.M1):
            continue  # every leading coefficient vanishes, nothing to detect
        with pytest.raises(AuditFailure) as info:
            bound_audit(graded, ms.scaled(0.5), mj)
        caught.append(info.value.witness)
    assert len(caught) >= 5
