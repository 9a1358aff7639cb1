import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chi2_contingency

from algact.groups import free_abelian, symmetric
from algact.groupring import RingElement, RingMatrix, VectorOverG, parse_matrix_expr, parse_ring_expr
from algact.measures import GeometricSym, Gaussian, UniformInt
from algact.spectral import l2_formal_inverse
from algact.theta import (SupportError, empirical_fourier, image_support_check, make_plan,
                          pairing_phases,
                          product_formula, psi_eval, theta_eval, theta_sample, translate_left,
                          translate_right, window_ball)

Z1, Z2 = free_abelian(1), free_abelian(2)


def vec(expr, spec=Z1):
    return VectorOverG([parse_ring_expr(p, spec, exact=True) for p in expr.split(",")])


@pytest.fixture(scope="module")
def inv2():
    return l2_formal_inverse(parse_matrix_expr("2 - u1", Z1), window=40)


# -- Psi and Theta pointwise ---------------------------------------------------------


def test_psi_examples():
    plan = make_plan(parse_matrix_expr("u1", Z1), UniformInt(1), [(0,)])
    assert psi_eval(plan, {(1,): (5,)}) == (5,)
    plan = make_plan(parse_matrix_expr("1/2", Z1, exact=True), UniformInt(1), [(0,)])
    assert psi_eval(plan, {(0,): (3,)}) == (Fraction(3, 2),)


def test_psi_support_violation():
    plan = make_plan(parse_matrix_expr("u1", Z1), UniformInt(1), [(0,)])
    with pytest.raises(SupportError):
        psi_eval(plan, {(7,): (1,)})


coef = st.fractions(-4, 4, max_denominator=5)
sparse = st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), coef, min_size=1, max_size=5)
inputs = st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(-3, 3), max_size=30)


@settings(max_examples=50, deadline=None)
@given(sparse, inputs)
def test_psi_matches_dense_dot(xi, x):
    """Psi(x) = sum_s xi(s) x(s), against a dense array oracle on the box [-3, 3]^2."""
    A, X = np.zeros((7, 7)), np.zeros((7, 7))
    for (a, b), c in xi.items():
        A[a + 3, b + 3] = float(c)
    for (a, b), v in x.items():
        X[a + 3, b + 3] = v
    plan = make_plan(RingMatrix.scalar(RingElement(Z2, xi)), UniformInt(3), [(0, 0)])
    got = psi_eval(plan, {g: (v,) for g, v in x.items() if g in set(plan.input_support)})
    assert float(got[0]) == pytest.approx(float(np.sum(A * X)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(sparse, sparse, inputs, st.tuples(st.integers(-2, 2), st.integers(-2, 2)))
def test_theta_identities_exact(a, b, x, g):
    xi, xi2 = RingMatrix.scalar(RingElement(Z2, a)), RingMatrix.scalar(RingElement(Z2, b))
    xv = {h: (v,) for h, v in x.items()}
    W = window_ball(Z2, 1)
    t1, t2, t12 = theta_eval(xi, xv, W), theta_eval(xi2, xv, W), theta_eval(xi + xi2, xv, W)
    for w in W:
        s = (t1[w][0] + t2[w][0]) % 1
        assert t12[w][0] == s
    # Theta_xi o rho(g) = Theta_{rho(g^-1) xi}
    assert theta_eval(xi, translate_right(Z2, xv, g), W) == theta_eval(xi.shift_right(Z2.inv(g)), xv, W)
    # Theta(x)(g) = Psi(g^-1 x)
    plan = make_plan(xi, UniformInt(3), [(0, 0)])
    moved = translate_left(Z2, xv, g)
    supp = {s for *_, s, _ in plan.terms}
    psi = psi_eval(plan, {h: v for h, v in moved.items() if h in supp})
    assert theta_eval(xi, xv, [g])[g] == tuple(v % 1 for v in psi)


def test_right_shift_nonabelian():
    S3 = symmetric(3)
    xi = parse_matrix_expr("1/2*(12) + 1/3*(123)", S3, exact=True)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = {h: (int(rng.integers(-3, 4)),) for h in range(6)}
        for g in range(6):
            assert theta_eval(xi, translate_right(S3, x, g), range(6)) == theta_eval(
                xi.shift_right(S3.inv(g)), x, range(6))


# -- sampling ---------------------------------------------------------------------


def test_integer_shift_gives_zero():
    plan = make_plan(parse_matrix_expr("u1", Z1), UniformInt(2), window_ball(Z1, 3))
    b = theta_sample(plan, 5000, seed=1)
    assert b.exact and not np.any(b.values)


def test_half_delta_frequencies():
    plan = make_plan(parse_matrix_expr("1/2", Z1, exact=True), UniformInt(1), [(0,)])
    N = 60_000
    v = theta_sample(plan, N, seed=3).values[:, 0, 0]
    assert set(np.unique(v)) <= {0.0, 0.5}
    p0 = np.mean(v == 0)
    se = math.sqrt(p0 * (1 - p0) / N)
    assert abs(p0 - 1 / 3) <= 3 * se


def test_window_translation_equivariance():
    """Samples on W g, relabelled, have the law of samples on W (chi-square at 1%)."""
    xi = parse_matrix_expr("1/2 + 1/3*u1", Z1, exact=True)
    W = [(0,), (1,)]
    Wg = [(5,), (6,)]
    a = theta_sample(make_plan(xi, UniformInt(1), W), 20_000, seed=9, stream=0).numer
    b = theta_sample(make_plan(xi, UniformInt(1), Wg), 20_000, seed=9, stream=1).numer
    keys = sorted({tuple(r.ravel()) for r in np.concatenate([a, b])})
    idx = {k: i for i, k in enumerate(keys)}
    table = np.zeros((2, len(keys)))
    for row, batch in enumerate([a, b]):
        for r in batch:
            table[row, idx[tuple(r.ravel())]] += 1
    assert chi2_contingency(table)[1] > 0.01


def test_sampling_thread_invariant():
    xi = parse_matrix_expr("0.3 - 0.7*u1 + 0.11*u2", Z2)
    plan = make_plan(xi, Gaussian(0.2), window_ball(Z2, 1))
    a = theta_sample(plan, 20_001, seed=4, threads=1, block=4096)
    b = theta_sample(plan, 20_001, seed=4, threads=4, block=4096)
    assert a.values.tobytes() == b.values.tobytes()


# -- Fourier coefficients ------------------------------------------------------------


def test_empirical_fourier_examples():
    plan = make_plan(parse_matrix_expr("1/2", Z1, exact=True), UniformInt(1), [(0,)])
    b = theta_sample(plan, 100_000, seed=7)
    zero = empirical_fourier(b, VectorOverG([RingElement.zero(Z1)]))
    assert zero == {"estimate": 1, "stderr": 0.0}
    e = empirical_fourier(b, vec("1"))
    assert abs(e["estimate"] - (-1 / 3)) <= 3 * e["stderr"]
    m = empirical_fourier(b, vec("-1"))
    assert m["estimate"] == e["estimate"].conjugate()


def test_conjugate_symmetry_exact_general():
    xi = parse_matrix_expr("1/3 + 1/4*u1 - 2/5*u1^2", Z1, exact=True)
    W = window_ball(Z1, 2)
    b = theta_sample(make_plan(xi, GeometricSym(1), W), 30_000, seed=2)
    a = vec("2*u1 - u1^-2 + 1")
    assert empirical_fourier(b, a.scale(-1))["estimate"] == empirical_fourier(b, a)["estimate"].conjugate()


def test_product_formula_examples(inv2):
    assert product_formula(parse_matrix_expr("u1", Z1), vec("3 - u1"), UniformInt(2))["value"] == 1
    r = product_formula(parse_matrix_expr("1/2", Z1), vec("1"), UniformInt(1))
    assert r["value"] == pytest.approx(-1 / 3, abs=1e-15) and r["tail_bound"] == 0
    want = np.prod([UniformInt(1).fourier(2.0 ** -(n + 1)) for n in range(41)])
    assert product_formula(inv2.xi, vec("1"), UniformInt(1))["value"] == pytest.approx(want, abs=1e-12)


def test_product_formula_vs_monte_carlo(inv2):
    plan = make_plan(inv2.xi, UniformInt(1), [(0,)])
    b = theta_sample(plan, 100_000, seed=11)
    e = empirical_fourier(b, vec("1"))
    pf = product_formula(inv2.xi, vec("1"), UniformInt(1))
    assert abs(e["estimate"] - pf["value"]) <= 3 * e["stderr"] + pf["tail_bound"]


def test_product_formula_tail_reported():
    xi = RingMatrix.scalar(RingElement(Z1, {(n,): 0.5 ** n for n in range(60)}))
    r = product_formula(xi, vec("1"), GeometricSym(1), tol=1e-6)
    full = product_formula(xi, vec("1"), GeometricSym(1), tol=1e-300)
    assert r["factors"] < full["factors"]
    assert abs(r["value"] - full["value"]) <= r["tail_bound"] * abs(r["value"]) + 1e-15


def test_product_continuity_halving():
    base = parse_matrix_expr("1/3 + 1/4*u1", Z1)
    alpha = vec("1 - u1")
    ref = product_formula(base, alpha, GeometricSym(1))["value"]
    gaps = []
    for j in range(1, 12):
        pert = base + RingMatrix.scalar(RingElement(Z1, {(2,): 2.0 ** -j}))
        gaps.append(abs(product_formula(pert, alpha, GeometricSym(1))["value"] - ref))
    # |prod a_i - prod b_i| <= sum |a_i - b_i| <= 2 pi E|X| ||beta - beta'||_1, E|X| = 4/3
    for j, gap in enumerate(gaps, start=1):
        assert gap <= 2 * math.pi * (4 / 3) * 2 * 2.0 ** -j
    assert gaps[-1] < 1e-4


def test_l2_continuity_of_psi():
    rng = np.random.default_rng(6)
    xi = RingMatrix.scalar(RingElement(Z1, {(n,): rng.normal() for n in range(-3, 4)}))
    xi2 = RingMatrix.scalar(RingElement(Z1, {(n,): rng.normal() for n in range(-3, 4)}))
    nu = GeometricSym(1)
    plan_d = make_plan(xi - xi2, nu, [(0,)])
    X = nu.sample(np.random.default_rng(1), 50_000 * len(plan_d.input_support)).reshape(50_000, -1)
    coeffs = np.array([float((xi - xi2).entries[0][0].coeffs.get(h, 0)) for h in plan_d.input_support])
    diff = X @ coeffs  # Psi_xi - Psi_xi' on shared draws
    emp = math.sqrt(np.mean(diff ** 2))
    bound = (xi - xi2).l2_norm() * math.sqrt(nu.m2)
    assert emp <= bound * 1.02


# -- image support ---------------------------------------------------------------------


def test_image_support(inv2):
    """Theta_xi lands in X^{xi^*}: alpha with r(xi) alpha integral pair to integers."""
    f = parse_ring_expr("2 - u1", Z1)
    W = window_ball(Z1, 3)
    plan = make_plan(inv2.xi, UniformInt(1), W)
    b = theta_sample(plan, 4000, seed=5, keep_inputs=True)
    ok = image_support_check(b, plan, [VectorOverG([f.shift_left((1,))]), VectorOverG([RingElement.zero(Z1)])])
    assert ok["within_budget"] and ok["rows"][1]["deviation"] == 0
    assert ok["max_deviation"] <= ok["budget"] < 1e-9
    # negative control: delta_0 is not in the annihilator; distances to Z spread over [0, 1/2]
    bad = image_support_check(b, plan, [vec("1")])
    assert bad["max_deviation"] > 0.4
    dev = np.abs(np.angle(pairing_phases(b, vec("1")))) / (2 * np.pi)
    assert 0.15 < dev.mean() < 0.35
