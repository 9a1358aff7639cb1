import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from algact.annihilator import (annihilator_test, claims_report, ideal_membership,
                                strong_witness_check, witness_fourier, xf_membership_test)
from algact.experiments import xf_duality_report
from algact.groups import free_abelian
from algact.groupring import RingElement, VectorOverG, parse_matrix_expr, parse_ring_expr
from algact.measures import GeometricSym, witness_measure
from algact.spectral import approximate_inverse, l2_formal_inverse
from algact.theta import empirical_fourier, make_plan, theta_sample

Z1 = free_abelian(1)
F = parse_matrix_expr("2 - u1", Z1)
K_LIST = [2, 4, 8, 16, 32, 64, 128, 256]


def a(expr):
    return parse_ring_expr(expr, Z1)


@pytest.fixture(scope="module")
def inv():
    return l2_formal_inverse(F, window=40)


def test_xf_membership_examples(inv):
    m = xf_membership_test(inv.xi, a("2 - u1"), trunc_l2=inv.truncation_l2)
    assert m["is_member"] and m["max_frac_deviation"] < 2.0 ** -38
    n = xf_membership_test(inv.xi, a("1"))
    assert not n["is_member"] and n["max_frac_deviation"] == pytest.approx(0.5)
    z = xf_membership_test(inv.xi, a("0"))
    assert z["is_member"] and z["max_frac_deviation"] == 0


def test_annihilator_uses_star():
    xi = parse_matrix_expr("1/2 + 1/2*u1", Z1, exact=True)
    # r(xi^*) alpha = alpha * xi^*: for alpha = 1 + u1^-1 gives 1/2 u1^-2 + u1^-1 + 1/2
    assert not annihilator_test(xi, a("1 + u1^-1"))["is_member"]
    assert annihilator_test(xi, a("1 - u1 + u1^2"))["is_member"] is False
    assert annihilator_test(xi, a("2"))["is_member"]
    # xf test reads r(xi) alpha = alpha * xi
    assert xf_membership_test(xi, a("1 - u1"))["is_member"] is False
    assert xf_membership_test(parse_matrix_expr("1/2*u1", Z1, exact=True), a("2*u1^-1"))["is_member"]


def test_ideal_trichotomy():
    r = ideal_membership(F, a("2 - u1"), L=2048)
    assert r["classification"] == "in-ideal"
    assert r["trajectory"][-1]["norm"] == pytest.approx(1, abs=1e-9)
    r = ideal_membership(parse_matrix_expr("1 - u1", Z1), a("1"), L=2048)
    assert r["classification"] == "off-ideal-divergent"
    norms = [t["norm"] for t in r["trajectory"]]
    assert all(b > a for a, b in zip(norms, norms[1:]))
    r = ideal_membership(F, a("1"), L=2048)
    assert r["classification"] == "off-ideal-l2"
    assert r["trajectory"][-1]["norm"] == pytest.approx(1 / math.sqrt(3), abs=1e-3)


def test_divergent_norm_tracks_quadrature():
    """||r(xi_k) delta_0||^2 = grid sum of |A|^-2 over {|A| >= 1/k}, A = 1 - e(theta)."""
    L = 2048
    f = parse_matrix_expr("1 - u1", Z1)
    r = ideal_membership(f, a("1"), K_LIST, L=L)
    A = np.abs(1 - np.exp(2j * np.pi * np.arange(L) / L))
    for t in r["trajectory"]:
        keep = A >= 1 / t["k"]
        assert t["norm"] ** 2 == pytest.approx(np.sum(1 / A[keep] ** 2) / L, rel=1e-9)
    # continuum value sqrt(k / pi) is approached from below
    assert r["trajectory"][-1]["norm"] < math.sqrt(256 / math.pi)


def test_zero_alpha_is_in_ideal():
    assert ideal_membership(F, a("0"), L=256)["classification"] == "in-ideal"


def test_witness_examples():
    w = witness_fourier(F, None, 0.1, 256, a("2 - u1"), L=2048)
    assert w["value"] == pytest.approx(math.exp(-0.1), abs=1e-6 + w["tail_bound"])
    assert witness_fourier(F, None, 0.1, 256, a("0"))["value"] == 1
    d = witness_fourier(F, None, 0.1, 256, a("1"), L=2048)
    prod = np.prod([GeometricSym(1).fourier(2.0 ** -(n + 1)) for n in range(60)])
    assert d["value"] == pytest.approx(math.exp(-0.1 / 3) * prod, abs=1e-9)
    assert abs(d["value"]) <= 1 / 9


def test_claims_battery():
    labels = ["0", "2 - u1", "2*u1 - u1^2", "1", "u1"]
    rep = claims_report(F, [a(s) for s in labels], K_LIST, [0.2, 0.1, 0.05, 0.025, 0.0125], L=2048,
                        labels=labels).to_dict()
    by = {x["alpha"]: x for x in rep["alphas"]}
    for s in labels[:3]:
        assert by[s]["kind"] == "ideal" and by[s]["pass"]
    for s in labels[3:]:
        assert by[s]["kind"] == "off-ideal" and by[s]["margin"] >= 0.8 and by[s]["max_abs"] <= 1 / 9 + 1e-6
    assert rep["status"] == "pass"
    frow = [r["value"] for r in rep["rows"] if r["alpha"] == "2 - u1" and r["k"] == 256]
    assert np.allclose(frow, np.exp(-np.array([0.2, 0.1, 0.05, 0.025, 0.0125])), atol=1e-6)
    assert all(abs(y) > abs(x) for x, y in zip(frow, frow[1:]))


def test_claims_empty_and_inconclusive():
    rep = claims_report(F, [], K_LIST, [0.1], L=512)
    assert rep.rows == [] and rep.alphas == []
    inc = claims_report(parse_matrix_expr("1 - u1", Z1), [a("1 - u1")], K_LIST, [0.1], L=2048)
    assert inc.status == "inconclusive"


@settings(max_examples=25, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(-4, 4)), st.integers(-3, 3), max_size=4),
       st.sampled_from([1, 4, 32]), st.sampled_from([0.3, 0.05]))
def test_witness_fourier_bounded(d, k, delta):
    w = witness_fourier(parse_matrix_expr("1 - u1 + u1^2", Z1), None, delta, k, RingElement(Z1, d), L=256)
    assert abs(w["value"]) <= 1 + 1e-12


@pytest.mark.parametrize("expr", ["2 - u1", "1", "u1", "4 - 2*u1", "1 + u1^2"])
def test_witness_matches_theta_sampling(expr):
    k, delta, N = 8, 0.1, 20_000
    xi = approximate_inverse(F, k, 2048, window=60).xi
    alpha = VectorOverG([a(expr)])
    plan = make_plan(xi, witness_measure(delta), alpha.support())
    e = empirical_fourier(theta_sample(plan, N, seed=21), alpha)
    w = witness_fourier(F, None, delta, k, alpha, L=2048)
    assert abs(e["estimate"] - w["value"]) <= 3 * e["stderr"] + w["tail_bound"] + 1e-9


def test_strong_witness_columns():
    xi = parse_matrix_expr("1/2", Z1, exact=True)
    ns = [0, 1, 2, 3, 5, 10, 64]
    member, half = strong_witness_check(xi, ns, [a("2"), a("1")])
    assert member["is_member"] and all(c["value"] == 1 for c in member["column"])
    assert not half["is_member"] and half["first_fractional"] == 0.5
    for c in half["column"]:
        assert abs(c["abs"] - 1 / (2 * c["n"] + 1)) <= 1e-9
        assert c["abs"] <= c["bound"] + 1e-12
    assert half["column"][0]["value"] == 1


def test_duality_battery():
    rep = xf_duality_report(L=2048)
    assert len(rep["table"]) == 20
    assert rep["status"] == "pass", [r for r in rep["table"] if not r["agree"]]
