import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from algact.groups import cyclic, free_abelian
from algact.groupring import (RingElement, RingMatrix, VectorOverG, matmul, parse_matrix_expr,
                              parse_ring_expr, right_apply)
from algact.spectral import (AliasingError, SingularSymbolError, apply_cutoff_inverse,
                             approximate_inverse, build_symbol, cutoff_inverse_norm,
                             injectivity_report, l2_formal_inverse, regular_rep)

Z1, Z2 = free_abelian(1), free_abelian(2)
K_LIST = [1, 2, 4, 8, 16, 32, 64, 128, 256]


def coeff_array(a: RingElement, lo: int, hi: int) -> np.ndarray:
    return np.array([float(a.coeffs.get((n,), 0)) for n in range(lo, hi + 1)])


# -- symbols -------------------------------------------------------------------


def test_symbol_of_2_minus_u1():
    L = 64
    sym = build_symbol(parse_matrix_expr("2 - u1", Z1), L)
    theta = np.arange(L) / L
    assert np.allclose(sym.values[:, 0, 0], 2 - np.exp(2j * np.pi * theta), atol=1e-12)
    mod = np.abs(sym.values[:, 0, 0])
    assert mod.min() == pytest.approx(1) and mod.max() == pytest.approx(3)


def test_symbol_of_delta_and_harmonic():
    assert np.allclose(build_symbol(parse_matrix_expr("1", Z1), 16).values, 1)
    L = 32
    v = build_symbol(parse_matrix_expr("4 - u1 - u1^-1 - u2 - u2^-1", Z2), L).values[..., 0, 0]
    t = np.arange(L) / L
    want = 4 - 2 * np.cos(2 * np.pi * t)[:, None] - 2 * np.cos(2 * np.pi * t)[None, :]
    assert np.allclose(v, want, atol=1e-12)
    zeros = np.argwhere(np.abs(v) < 1e-12)
    assert zeros.tolist() == [[0, 0]]


def test_aliasing_is_refused():
    with pytest.raises(AliasingError):
        build_symbol(parse_matrix_expr("u1^5", Z1), 8)


def mat_z1(n):
    el = st.dictionaries(st.tuples(st.integers(-3, 3)), st.floats(-2, 2, allow_nan=False), max_size=3)
    return st.lists(el, min_size=n * n, max_size=n * n).map(
        lambda ds: RingMatrix([[RingElement(Z1, ds[i * n + j]) for j in range(n)] for i in range(n)], Z1))


@settings(max_examples=30, deadline=None)
@given(mat_z1(2), mat_z1(2))
def test_convolution_theorem(f, g):
    L = 32
    lhs = (build_symbol(f, L) @ build_symbol(g, L)).values
    rhs = build_symbol(matmul(f, g), L).values
    assert np.allclose(lhs, rhs, atol=1e-10)


# -- injectivity ---------------------------------------------------------------


def test_injectivity_examples():
    r = injectivity_report(parse_matrix_expr("2 - u1", Z1))
    assert r["injective"] and r["min_singular_value"] == pytest.approx(1, abs=1e-12)
    assert r["zero_fraction"] == 0
    r = injectivity_report(parse_matrix_expr("1 - u1", Z1))
    assert r["injective"] and r["min_singular_value"] < 1e-9
    assert r["refined_zero_fraction"] < r["zero_fraction"]
    assert not injectivity_report(parse_matrix_expr("0", Z1))["injective"]


def test_harmonic_model_has_point_zero():
    r = injectivity_report(parse_matrix_expr("4 - u1 - u1^-1 - u2 - u2^-1", Z2), L=64)
    assert r["injective"] and not r["positive_dim_zero_set"]


def test_positive_dimensional_zero_set_flagged():
    # zeros on the line theta_1 = 0: measure zero, so still injective on ell^2
    r = injectivity_report(parse_matrix_expr("1 - u1", Z2), L=32)
    assert r["injective"] and r["positive_dim_zero_set"]
    assert r["dimension_hint"] == pytest.approx(1.0)
    assert not injectivity_report(parse_matrix_expr("1 - u1, 1 - u1; 1, 1", Z2), L=16)["injective"]


def test_finite_kernel_dimension_exact():
    G = cyclic(6)
    r = injectivity_report(parse_matrix_expr("1 - u1", G, exact=True))
    assert r["kernel_dim"] == 1 and not r["injective"]
    M = regular_rep(parse_matrix_expr("1 + u1^3", G, exact=True), exact=True)
    assert 6 - M.rank() == injectivity_report(parse_matrix_expr("1 + u1^3", G, exact=True))["kernel_dim"] == 3


# -- formal inverses -----------------------------------------------------------


def test_formal_inverse_geometric():
    F = l2_formal_inverse(parse_matrix_expr("2 - u1", Z1), window=40)
    got = coeff_array(F.xi.entries[0][0], -5, 40)
    want = np.array([0.0] * 5 + [2.0 ** -(n + 1) for n in range(41)])
    assert np.allclose(got, want, atol=1e-13)
    assert F.residual <= 4 * 2.0 ** -40


def test_formal_inverse_of_identity():
    F = l2_formal_inverse(parse_matrix_expr("1", Z1), window=3)
    assert F.xi.entries[0][0].allclose(RingElement.one(Z1), atol=1e-14)


def test_formal_inverse_symmetric_three_term():
    F = l2_formal_inverse(parse_matrix_expr("3 - u1 - u1^-1", Z1), window=30)
    r = (3 - math.sqrt(5)) / 2
    c = 1 / math.sqrt(5)  # 1 / (r^-1 - r)
    got = coeff_array(F.xi.entries[0][0], -30, 30)
    want = np.array([c * r ** abs(n) for n in range(-30, 31)])
    assert np.allclose(got, want, atol=1e-12)
    assert F.residual < 1e-10


def test_formal_inverse_refuses_singular():
    with pytest.raises(SingularSymbolError):
        l2_formal_inverse(parse_matrix_expr("1 - u1", Z1))


# -- approximate inverses ------------------------------------------------------


def test_approx_inverse_invertible_case():
    f = parse_matrix_expr("2 - u1", Z1)
    for k in [2, 16, 256]:
        a = approximate_inverse(f, k, 2048, 512)
        assert a.residual_left < 1e-8 and a.residual_right < 1e-8
        assert a.op_norm_bound <= 1 + 1e-6


def test_approx_inverse_singular_case():
    f = parse_matrix_expr("1 - u1", Z1)
    prev = math.inf
    for k in [4, 16, 64, 256]:
        a = approximate_inverse(f, k, 2048)
        assert a.op_norm_bound <= 1 + 1e-6
        assert a.residual_left ** 2 == pytest.approx(1 / (math.pi * k), rel=0.2)
        assert a.residual_left <= prev + 1e-6
        prev = a.residual_left


def test_finite_approx_inverse_matches_linear_solve():
    G = cyclic(8)
    f = parse_matrix_expr("2 - u1", G)
    C = np.zeros((8, 8))
    for i in range(8):  # right-regular matrix of 2 delta_0 - delta_1 (circulant)
        C[i, i] += 2
        C[(i + 1) % 8, i] -= 1
    smin = np.linalg.svd(C, compute_uv=False).min()
    for k in [1, 2, 5]:
        assert k >= 1 / smin - 1e-12
        a = approximate_inverse(f, k)
        assert a.residual_left < 1e-12
        sol = np.linalg.solve(C, np.eye(8)[:, 0])  # x with C x = delta_0
        xi = a.xi.entries[0][0]
        got = np.array([float(xi.coeffs.get(i, 0)) for i in range(8)])
        assert np.allclose(sorted(got), sorted(sol), atol=1e-12)


@pytest.mark.parametrize("expr,k", [("2 - u1 - 0.5*u1^-1", 3), ("1 - u1", 2), ("1 - u1 + 0.25*u1^2", 5)])
def test_finite_backend_equals_periodic_grid(expr, k):
    L = 16
    a = approximate_inverse(parse_matrix_expr(expr, cyclic(L)), k)
    b = approximate_inverse(parse_matrix_expr(expr, Z1), k, L=L)
    xa, xb = a.xi.entries[0][0], b.xi.entries[0][0]
    wrapped = np.zeros(L)
    for (n,), c in xb.items():
        wrapped[n % L] += c
    direct = np.array([float(xa.coeffs.get(i, 0)) for i in range(L)])
    assert np.allclose(direct, wrapped, atol=1e-10)
    assert a.residual_left == pytest.approx(b.residual_left, abs=1e-10)
    assert a.op_norm_bound == pytest.approx(b.op_norm_bound, abs=1e-10)


def test_two_by_two_cutoff():
    f = parse_matrix_expr("2 - u1, 0; u1, 3 - u1^-1", Z1)
    auto = approximate_inverse(f, 4, 256)
    a = approximate_inverse(f, 4, 256, window=100)
    assert a.op_norm_bound <= 1 + 1e-6 and a.residual_left < 1e-8
    assert auto.truncation_l2 > 0
    assert a.residual_left < auto.residual_left


# -- ideal-test limits ---------------------------------------------------------


def _dist(u: VectorOverG, v: VectorOverG) -> float:
    return math.sqrt(sum((a - b).l2_norm() ** 2 for a, b in zip(u.components, v.components)))


@settings(max_examples=8, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(-3, 3)), st.integers(-3, 3), min_size=1, max_size=4))
def test_right_ideal_limit_monotone(d):
    """||r(xi_k) r(f) zeta - zeta||_2 decreases to 0 for injective f = 1 - u1."""
    f = parse_matrix_expr("1 - u1", Z1)
    zeta = VectorOverG([RingElement(Z1, d)])
    fz = right_apply(f, zeta)
    errs = [_dist(apply_cutoff_inverse(f, fz, k, 2048), zeta) for k in K_LIST]
    assert all(b <= a + 1e-6 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.2 * max(errs[0], 1e-12) or errs[-1] < 1e-6


def test_left_ideal_limit_monotone():
    """||r(f) r(xi_k) zeta - zeta||_2 for f = 2 - u1 (inverse symbol, limit reached)."""
    f = parse_matrix_expr("2 - u1", Z1)
    zeta = VectorOverG([parse_ring_expr("1 - 2*u1^3", Z1)])
    errs = [_dist(right_apply(f, apply_cutoff_inverse(f, zeta, k, 512)), zeta) for k in K_LIST]
    assert all(b <= a + 1e-6 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-10


def test_cutoff_norm_matches_applied_vector():
    f = parse_matrix_expr("2 - u1", Z1)
    a = VectorOverG([RingElement.one(Z1)])
    v = apply_cutoff_inverse(f, a, 8, 512)
    assert v.l2_norm() == pytest.approx(cutoff_inverse_norm(f, a, 8, 512), rel=1e-12)
    assert v.l2_norm() == pytest.approx(1 / math.sqrt(3), rel=1e-12)
