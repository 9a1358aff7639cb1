"""Integrality tests for annihilators, ideal membership diagnostics for
r(f) Z(G)^n, and the two witness-measure families.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .groupring import RingMatrix, VectorOverG, as_matrix, as_vector, right_apply
from .measures import BaseMeasure, GeometricSym, UniformInt, fourier_quadratic_bound
from .spectral import (approximate_inverse, apply_cutoff_inverse, cutoff_inverse_norm,
                       default_grid)

INTEGRALITY_TOL = 1e-6
DIVERGENCE_FACTOR = 1e3
STABLE_REL = 0.01
GROWTH_REL = 0.05
GROWTH_SLOPE = 0.2
SHRINK_RATIO = 0.75
# trunc_rel used when the limit vector of r(xi_k) alpha is checked for integrality
LIMIT_TRUNC_REL = 1e-24

IN_IDEAL = "in-ideal"
OFF_L2 = "off-ideal-l2"
OFF_DIVERGENT = "off-ideal-divergent"
INCONCLUSIVE = "inconclusive"


def frac_deviation(v: VectorOverG) -> float:
    return v.max_frac_distance()


def annihilator_test(xi, alpha, tol: float = INTEGRALITY_TOL, trunc_l2: float = 0.0) -> dict:
    """Membership of integral alpha in (X^xi)^o: is r(xi^*) alpha integral?

    ``xi`` is k x m and ``alpha`` has m components.  A truncated xi carries
    ``trunc_l2`` (ell^2 norm of the discarded part); each coordinate of
    r(xi^*) alpha then moves by at most trunc_l2 * ||alpha||_1.
    """
    xi = as_matrix(xi)
    alpha = as_vector(alpha)
    if not alpha.is_integral():
        raise ValueError("alpha must be integral")
    gamma = right_apply(xi.star(), alpha)
    dev = frac_deviation(gamma)
    l1 = sum(c.l1_norm() for c in alpha.components)
    budget = trunc_l2 * l1
    return {"is_member": dev <= tol + budget, "max_frac_deviation": dev,
            "tol": tol, "budget": budget, "image": gamma}


def xf_membership_test(xi, alpha, tol: float = INTEGRALITY_TOL, trunc_l2: float = 0.0) -> dict:
    """alpha in X_f^o = (X^{xi^*})^o for xi an ell^2 formal inverse of f, i.e.
    r(xi) alpha integral."""
    return annihilator_test(as_matrix(xi).star(), alpha, tol, trunc_l2)


def default_k_list(kmax: int = 256) -> list:
    out, k = [], 1
    while k <= kmax:
        out.append(k)
        k *= 2
    return out


def _stabilized(norms: list) -> bool:
    if len(norms) < 3:
        return False
    a, b, c = norms[-3:]
    if max(a, b, c) == 0:
        return True
    return (b > 0 and abs(c - b) / b < STABLE_REL) and (a > 0 and abs(b - a) / a < STABLE_REL)


def _growing(norms: list, ks: list) -> bool:
    """Sustained power-law growth: each of the last three steps adds >= 5% and
    the log-log slope of norm against k over them is >= 0.2."""
    if len(norms) < 4:
        return False
    tail, kt = norms[-4:], ks[-4:]
    if min(tail) <= 0:
        return False
    rel = [(tail[i + 1] - tail[i]) / tail[i] for i in range(3)]
    slope = math.log(tail[-1] / tail[0]) / math.log(kt[-1] / kt[0])
    return all(r >= GROWTH_REL for r in rel) and slope >= GROWTH_SLOPE


def ideal_membership(f, alpha, k_list=None, L: int | None = None,
                     tol: float = INTEGRALITY_TOL, threshold: float = DIVERGENCE_FACTOR) -> dict:
    """Classify alpha against r(f) Z(G)^m from the trajectory ||r(xi_k) alpha||_2.

    Divergent: the norm exceeds ``threshold * ||alpha||_2`` or shows sustained
    growth (last three steps each add >= 5%, log-log slope >= 0.2).
    Stable (< 1% change over the last two steps): the limit r(xi_K) alpha is
    tested for integrality; a non-integral limit whose distance to Z is still
    shrinking between the last two k is inconclusive, as is anything else.
    """
    f = as_matrix(f)
    alpha = as_vector(alpha)
    k_list = list(k_list or default_k_list())
    traj = [{"k": k, "norm": cutoff_inverse_norm(f, alpha, k, L)} for k in k_list]
    norms = [r["norm"] for r in traj]
    anorm = alpha.l2_norm()
    out = {"trajectory": traj, "alpha_norm": anorm, "threshold": threshold * anorm,
           "threshold_reached": bool(anorm > 0 and max(norms) > threshold * anorm),
           "growth_rule": _growing(norms, k_list), "stabilized": _stabilized(norms),
           "limit_frac_deviation": None, "limit_norm": None}
    if out["threshold_reached"] or (out["growth_rule"] and not out["stabilized"]):
        out["classification"] = OFF_DIVERGENT
        return out
    if not out["stabilized"]:
        out["classification"] = INCONCLUSIVE
        return out
    limit, dev, budget = _limit_vector(f, alpha, k_list[-1], L)
    out["limit_norm"] = norms[-1]
    out["limit_frac_deviation"] = dev
    out["limit_budget"] = budget
    out["limit"] = limit
    if dev <= tol + budget:
        out["classification"] = IN_IDEAL
        return out
    # a non-integral limit only counts once its distance to Z has stopped shrinking
    _, prev, _ = _limit_vector(f, alpha, k_list[-2], L)
    out["previous_frac_deviation"] = prev
    out["classification"] = INCONCLUSIVE if dev < SHRINK_RATIO * prev else OFF_L2
    return out


def _limit_vector(f, alpha, K, L):
    if f.spec.is_finite:
        limit = apply_cutoff_inverse(f, alpha, K)
        budget = 0.0
    else:
        ai = approximate_inverse(f, K, L, trunc_rel=LIMIT_TRUNC_REL)
        limit = right_apply(ai.xi, alpha)
        budget = ai.truncation_l2 * sum(c.l1_norm() for c in alpha.components)
    return limit, frac_deviation(limit), budget


# -- witness measures --------------------------------------------------------


def _product_over(beta: VectorOverG, nu: BaseMeasure, tol: float) -> tuple:
    """prod_g nu_hat(beta(g)) with the expanding-ball tail rule."""
    C = fourier_quadratic_bound(nu)
    supp = beta.support()
    if not supp:
        return 1 + 0j, 0.0
    spec = beta.spec
    vals = np.array([[float(v) for v in beta.value(g)] for g in supp])
    rad = np.array([spec.radius(g) for g in supp])
    mass = np.sum(vals ** 2, axis=1)
    fac = np.atleast_1d(nu.fourier(vals))
    R = int(rad.max())
    for r in range(int(rad.max()) + 1):
        if C * float(mass[rad > r].sum()) < tol:
            R = r
            break
    inside = rad <= R
    return complex(np.prod(fac[inside])), math.expm1(C * float(mass[~inside].sum()))


def witness_fourier(f, eta: BaseMeasure | None, delta: float, k: float, alpha, L: int | None = None,
                    tol: float = 1e-12) -> dict:
    """exp(-delta ||r(xi_k) alpha||^2) * prod_g eta_hat((r(xi_k) alpha)(g))."""
    f = as_matrix(f)
    alpha = as_vector(alpha)
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = f.rows
    eta = eta or GeometricSym(m)
    if not any(alpha.components):
        return {"value": 1 + 0j, "tail_bound": 0.0, "beta_norm_sq": 0.0}
    beta = apply_cutoff_inverse(f, alpha, k, L)
    nsq = cutoff_inverse_norm(f, alpha, k, L) ** 2
    prod, tail = _product_over(beta, eta, tol)
    return {"value": math.exp(-delta * nsq) * prod, "tail_bound": tail, "beta_norm_sq": nsq}


@dataclass
class WitnessReport:
    f: str
    eta: str
    k_list: list
    delta_list: list
    rows: list = field(default_factory=list)
    alphas: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if any(a["verdict"] == INCONCLUSIVE for a in self.alphas):
            return "inconclusive"
        return "pass" if all(a["pass"] for a in self.alphas) else "fail"

    def to_dict(self) -> dict:
        return {"f": self.f, "eta": self.eta, "k_list": self.k_list, "delta_list": self.delta_list,
                "alphas": self.alphas, "rows": self.rows, "status": self.status}


def claims_report(f, alpha_list, k_list, delta_list, eta: BaseMeasure | None = None,
                  L: int | None = None, tol: float = 1e-6, labels=None) -> WitnessReport:
    """Table of witness Fourier values over (alpha, k, delta), with per-alpha
    diagnostics.

    Rows of kind "ideal" (alpha in r(f) Z(G)^m): the value at the largest k must
    match exp(-delta ||beta||^2) with beta the integral limit of r(xi_k) alpha,
    within tol + tail.  Rows of kind "off-ideal": the margin 1 - max |value| at
    the largest k must be positive.
    """
    from .groupring import format_ring_expr, format_matrix_expr
    f = as_matrix(f)
    eta = eta or GeometricSym(f.rows)
    rep = WitnessReport(format_matrix_expr(f), eta.describe(), list(k_list), list(delta_list))
    K = k_list[-1] if k_list else None
    for ai, alpha in enumerate(alpha_list):
        alpha = as_vector(alpha)
        label = labels[ai] if labels else ", ".join(format_ring_expr(c) for c in alpha.components)
        cls = ideal_membership(f, alpha, k_list, L)
        verdict = cls["classification"]
        vals = {}
        for k in k_list:
            for delta in delta_list:
                w = witness_fourier(f, eta, delta, k, alpha, L)
                vals[(k, delta)] = w
                rep.rows.append({"alpha": label, "k": k, "delta": delta,
                                 "value": w["value"], "abs": abs(w["value"]),
                                 "tail_bound": w["tail_bound"], "beta_norm_sq": w["beta_norm_sq"]})
        entry = {"alpha": label, "verdict": verdict, "trajectory": cls["trajectory"]}
        if verdict == IN_IDEAL:
            limit = cls["limit"]
            bnorm = sum(float(round(float(v))) ** 2 for c in limit.components for v in c.coeffs.values())
            errs = []
            for delta in delta_list:
                w = vals[(K, delta)]
                expect = math.exp(-delta * bnorm)
                errs.append({"delta": delta, "value": w["value"], "expected": expect,
                             "error": abs(w["value"] - expect), "allowed": tol + w["tail_bound"]})
            entry.update(kind="ideal", beta_norm_sq=bnorm, checks=errs,
                         pass_=all(e["error"] <= e["allowed"] for e in errs))
        elif verdict in (OFF_L2, OFF_DIVERGENT):
            worst = max((abs(vals[(K, d)]["value"]) for d in delta_list), default=0.0)
            entry.update(kind="off-ideal", max_abs=worst, margin=1 - worst, pass_=1 - worst > 0)
        else:
            entry.update(kind=None, pass_=False)
        entry["pass"] = entry.pop("pass_")
        rep.alphas.append(entry)
    return rep


def strong_witness_check(xi, n_list, alpha_list, tol: float = INTEGRALITY_TOL,
                         trunc_l2: float = 0.0) -> list:
    """Fourier values of the pushforward of UniformInt(n)^{(x) G} under Theta_{xi^*}:
    prod_g D_n((r(xi^*) alpha)(g)), with D_n the Dirichlet kernel.

    Annihilator members give 1 for every n; otherwise |value| is bounded by
    |D_n| at the first fractional coordinate and tends to 0.
    """
    xi = as_matrix(xi)
    k = xi.rows
    rows = []
    for alpha in alpha_list:
        alpha = as_vector(alpha)
        test = annihilator_test(xi, alpha, tol, trunc_l2)
        gamma = test["image"]
        supp = gamma.support()
        vals = np.array([[float(v) for v in gamma.value(g)] for g in supp]).reshape(-1, k)
        frac = np.abs(vals - np.round(vals))
        first = None
        if not test["is_member"]:
            flat = vals.ravel()
            idx = int(np.argmax(np.abs(flat - np.round(flat)) > tol))
            first = float(flat[idx])
        col = []
        for n in n_list:
            nu = UniformInt(n, k)
            value = complex(np.prod(np.atleast_1d(nu.fourier(vals)))) if len(vals) else 1 + 0j
            bound = abs(complex(UniformInt(n, 1).fourier(first))) if first is not None else 1.0
            col.append({"n": n, "value": value, "abs": abs(value), "bound": bound})
        rows.append({"is_member": test["is_member"], "max_frac_deviation": test["max_frac_deviation"],
                     "first_fractional": first, "column": col,
                     "max_fractional_coordinate": float(frac.max()) if frac.size else 0.0})
    return rows
