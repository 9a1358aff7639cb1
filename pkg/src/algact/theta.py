"""The convolution extension Theta_xi and its pushforward measure.

For xi an m x k matrix over G and x in (R^k)^G,

    Theta_xi(x)(g)(j) = sum_l sum_s xi_jl(s) x(g s)(l)   (mod 1),
    Psi_xi(x)         = Theta_xi(x)(1) before reduction,

so Theta_xi(x) = q(r(xi^*) x).  The Fourier transform of the pushforward of
nu^{(x) G} is prod_g nu_hat((r(xi) alpha)(g)).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .groups import GroupSpec, enumerate_ball
from .groupring import RingElement, RingMatrix, VectorOverG, as_matrix, as_vector, right_apply
from .measures import BaseMeasure, MeasureError, fourier_quadratic_bound
from .streams import BLOCK, blocks, substream


class SupportError(ValueError):
    pass


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@dataclass(frozen=True)
class ThetaPlan:
    """Everything needed to evaluate Theta_xi on a finite window of coordinates."""

    xi: RingMatrix
    nu: BaseMeasure
    window: tuple
    trunc_l2: float = 0.0
    input_support: tuple = field(init=False)
    terms: tuple = field(init=False, repr=False)

    def __post_init__(self):
        xi = as_matrix(self.xi)
        object.__setattr__(self, "xi", xi)
        spec = xi.spec
        if xi.cols != self.nu.k:
            raise ValueError(f"xi has {xi.cols} columns but nu lives on R^{self.nu.k}")
        if self.trunc_l2 < 0:
            raise ValueError("trunc_l2 must be nonnegative")
        W = tuple(dict.fromkeys(spec.normalize(g) for g in self.window))
        if not W:
            raise ValueError("window is empty")
        object.__setattr__(self, "window", W)
        # (j, l, s, c) for every nonzero xi_jl(s), deterministic order
        terms = []
        for j in range(xi.rows):
            for l in range(xi.cols):
                for s, c in xi.entries[j][l].items():
                    terms.append((j, l, s, c))
        object.__setattr__(self, "terms", tuple(terms))
        sup = {spec.mul(g, s) for g in W for (_, _, s, _) in terms}
        object.__setattr__(self, "input_support", tuple(sorted(sup, key=spec.sort_key)))

    @property
    def spec(self) -> GroupSpec:
        return self.xi.spec

    @property
    def m(self) -> int:
        return self.xi.rows

    @property
    def k(self) -> int:
        return self.xi.cols

    @property
    def exact(self) -> bool:
        """Integer arithmetic is exact: rational xi and a lattice-valued nu."""
        return self.xi.is_exact() and self.nu.integer_valued

    @property
    def denominator(self) -> int:
        return reduce(_lcm, (Fraction(c).denominator for *_, c in self.terms), 1)

    def index_maps(self) -> list:
        """For each term, the input-support positions of g s over the window."""
        pos = {h: i for i, h in enumerate(self.input_support)}
        mul = self.spec.mul
        return [np.array([pos[mul(g, s)] for g in self.window], dtype=np.int64)
                for (_, _, s, _) in self.terms]


def make_plan(xi, nu: BaseMeasure, window, trunc_l2: float = 0.0) -> ThetaPlan:
    return ThetaPlan(as_matrix(xi), nu, tuple(window), trunc_l2)


# -- exact pointwise evaluation ---------------------------------------------


def _lookup(x, spec):
    """Normalize x into a dict g -> k-tuple."""
    if isinstance(x, VectorOverG):
        return x.to_mapping(), x.k
    out = {}
    k = None
    for g, v in x.items():
        v = tuple(v) if isinstance(v, (tuple, list, np.ndarray)) else (v,)
        k = len(v)
        out[spec.normalize(g)] = v
    return out, k


def theta_raw(xi, x, window) -> dict:
    """r(xi^*) x on ``window`` (no reduction), exact in the coefficient arithmetic.
    Missing coordinates of x count as 0."""
    xi = as_matrix(xi)
    spec = xi.spec
    vals, k = _lookup(x, spec)
    if k is not None and k != xi.cols:
        raise ValueError(f"x has {k} components, xi has {xi.cols} columns")
    mul = spec.mul
    out = {}
    for g in window:
        g = spec.normalize(g)
        row = []
        for j in range(xi.rows):
            acc = 0
            for l in range(xi.cols):
                for s, c in xi.entries[j][l].items():
                    v = vals.get(mul(g, s))
                    if v is not None and v[l]:
                        acc += c * v[l]
            row.append(acc)
        out[g] = tuple(row)
    return out


def _mod1(v):
    if isinstance(v, (int, Fraction)):
        return v - math.floor(v)
    r = float(v) % 1.0
    return 0.0 if r == 1.0 else r


def theta_eval(xi, x, window) -> dict:
    """Theta_xi(x) on ``window``: coordinates reduced mod 1 into [0, 1)."""
    return {g: tuple(_mod1(v) for v in row) for g, row in theta_raw(xi, x, window).items()}


def psi_eval(plan: ThetaPlan, x) -> tuple:
    """Psi_xi(x) = (r(xi^*) x)(1) as an unreduced real m-vector."""
    spec = plan.spec
    vals, _ = _lookup(x, spec)
    allowed = set(plan.input_support) | {h for (_, _, h, _) in plan.terms}
    bad = [g for g, v in vals.items() if any(v) and g not in allowed]
    if bad:
        raise SupportError(f"x is supported outside the plan's input support, e.g. at {bad[0]!r}")
    return theta_raw(plan.xi, vals, [spec.identity])[spec.identity]


def translate_left(spec: GroupSpec, x: dict, g) -> dict:
    """(g^-1 x)(h) = x(g h), i.e. the result at h reads x at g h."""
    gi = spec.inv(spec.normalize(g))
    return {spec.mul(gi, h): v for h, v in x.items()}


def translate_right(spec: GroupSpec, x: dict, g) -> dict:
    """(rho(g) x)(h) = x(h g)."""
    gi = spec.inv(spec.normalize(g))
    return {spec.mul(h, gi): v for h, v in x.items()}


# -- sampling ----------------------------------------------------------------


@dataclass(frozen=True)
class SampleBatch:
    """N samples of Theta on a window, values in [0, 1).

    ``values`` has shape (N, |W|, m).  In exact mode ``numer`` holds integer
    numerators over ``denom`` and ``values = numer / denom``.
    """

    window: tuple
    values: np.ndarray = field(repr=False)
    seed: int
    stream: int
    numer: np.ndarray | None = field(default=None, repr=False)
    denom: int = 1
    inputs: np.ndarray | None = field(default=None, repr=False)
    input_support: tuple = ()

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def exact(self) -> bool:
        return self.numer is not None


def draw_inputs(plan: ThetaPlan, n: int, seed: int, stream: int = 0, block: int = 0) -> np.ndarray:
    """i.i.d. nu draws on the input support for one block: shape (n, S, k)."""
    rng = substream(seed, stream, block)
    S = len(plan.input_support)
    return plan.nu.sample(rng, n * S).reshape(n, S, plan.k)


def theta_from_inputs(plan: ThetaPlan, X: np.ndarray):
    """Evaluate Theta on a block of inputs by an explicit sparse loop (fixed
    summation order, so results are bit-reproducible).  Returns
    (values, numerators or None)."""
    n = X.shape[0]
    nW = len(plan.window)
    maps = plan.index_maps()
    if plan.exact:
        D = plan.denominator
        acc = np.zeros((n, nW, plan.m), dtype=object if _may_overflow(plan, X) else np.int64)
        for (j, l, _, c), idx in zip(plan.terms, maps):
            cz = int(Fraction(c) * D)
            acc[:, :, j] += cz * X[:, idx, l]
        numer = np.mod(acc, D).astype(np.int64)
        return numer / D, numer
    acc = np.zeros((n, nW, plan.m))
    for (j, l, _, c), idx in zip(plan.terms, maps):
        acc[:, :, j] += float(c) * X[:, idx, l]
    vals = np.mod(acc, 1.0)
    vals[vals >= 1.0] = 0.0
    return vals, None


def _may_overflow(plan: ThetaPlan, X: np.ndarray) -> bool:
    D = plan.denominator
    bound = sum(abs(int(Fraction(c) * D)) for *_, c in plan.terms) * (int(np.abs(X).max()) if X.size else 0)
    return bound >= 2 ** 62


def theta_sample(plan: ThetaPlan, N: int, seed: int, stream: int = 0, threads: int = 1,
                 keep_inputs: bool = False, block: int = BLOCK) -> SampleBatch:
    """Draw N samples of Theta_xi(x), x ~ nu^{(x) G}, on the plan's window.

    Samples are produced in fixed-size blocks, block b from substream
    (seed, stream, b); the thread count only changes scheduling.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    spans = list(blocks(N, block))

    def work(span):
        b, lo, hi = span
        X = draw_inputs(plan, hi - lo, seed, stream, b)
        v, num = theta_from_inputs(plan, X)
        return v, num, (X if keep_inputs else None)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, spans))
    else:
        parts = [work(s) for s in spans]
    values = np.concatenate([p[0] for p in parts])
    numer = np.concatenate([p[1] for p in parts]) if plan.exact else None
    inputs = np.concatenate([p[2] for p in parts]) if keep_inputs else None
    return SampleBatch(plan.window, values, seed, stream, numer,
                       plan.denominator if plan.exact else 1, inputs, plan.input_support)


# -- Fourier coefficients ----------------------------------------------------


def _alpha_weights(window: tuple, alpha: VectorOverG) -> np.ndarray:
    """alpha as an (|W|, m) integer array; errors if alpha leaves the window."""
    pos = {g: i for i, g in enumerate(window)}
    A = np.zeros((len(window), alpha.k), dtype=np.int64)
    for l, comp in enumerate(alpha.components):
        for g, c in comp.coeffs.items():
            if g not in pos:
                raise SupportError(f"alpha is supported outside the window at {g!r}")
            if c != int(c):
                raise ValueError("alpha must be integral")
            A[pos[g], l] = int(c)
    return A


def pairing_phases(batch: SampleBatch, alpha) -> np.ndarray:
    """exp(2 pi i <theta_s, alpha>) for each sample."""
    alpha = as_vector(alpha)
    A = _alpha_weights(batch.window, alpha)
    if A.shape[1] != batch.values.shape[2]:
        raise ValueError("alpha has the wrong number of components")
    if batch.exact:
        D = batch.denom
        r = np.mod(np.einsum("nwm,wm->n", batch.numer, A), D)
        c = np.where(2 * r > D, r - D, r)
        z = np.exp(2j * np.pi * (c / D))
        half = 2 * r == D
        z[half] = -1.0
        return z
    p = np.einsum("nwm,wm->n", batch.values, A.astype(float))
    return np.exp(2j * np.pi * p)


def empirical_fourier(batch: SampleBatch, alpha) -> dict:
    """Monte Carlo estimate of mu_hat(alpha) with stderr = sample std / sqrt(N)."""
    alpha = as_vector(alpha)
    if not any(alpha.components):
        return {"estimate": 1 + 0j, "stderr": 0.0}
    z = pairing_phases(batch, alpha)
    mean = z.mean()
    stderr = math.sqrt(float(np.mean(np.abs(z - mean) ** 2)) / len(z))
    return {"estimate": complex(mean), "stderr": stderr}


def product_formula(xi, alpha, nu: BaseMeasure, tol: float = 1e-12) -> dict:
    """prod_g nu_hat((r(xi) alpha)(g)) over expanding max-norm balls.

    Stops once C * sum_{g outside} ||beta(g)||^2 < tol with C the quadratic
    Fourier bound; ``tail_bound`` = expm1(C * remaining mass) bounds the
    error from the omitted factors.
    """
    xi = as_matrix(xi)
    alpha = as_vector(alpha)
    C = fourier_quadratic_bound(nu)
    beta = right_apply(xi, alpha)
    spec = xi.spec
    supp = beta.support()
    if not supp:
        return {"value": 1 + 0j, "tail_bound": 0.0, "radius": 0, "factors": 0, "beta_support": 0}
    vals = np.array([[float(v) for v in beta.value(g)] for g in supp])
    rad = np.array([spec.radius(g) for g in supp])
    mass = np.sum(vals ** 2, axis=1)
    order = np.argsort(rad, kind="stable")
    vals, rad, mass = vals[order], rad[order], mass[order]
    fac = nu.fourier(vals)
    fac = np.atleast_1d(fac)
    R = -1
    for R in range(int(rad.max()) + 1):
        outside = float(mass[rad > R].sum())
        if C * outside < tol:
            break
    inside = rad <= R
    value = complex(np.prod(fac[inside]))
    tail = math.expm1(C * float(mass[~inside].sum()))
    return {"value": value, "tail_bound": tail, "radius": int(R),
            "factors": int(inside.sum()), "beta_support": len(supp)}


def image_support_check(batch: SampleBatch, plan: ThetaPlan, alphas) -> dict:
    """Max distance of <theta_s, alpha> to Z over samples and alphas, with the
    budget sup|x| * ||beta - round(beta)||_1 (+ float slack) where beta = r(xi) alpha."""
    if not plan.nu.integer_valued:
        raise MeasureError("image support statement needs a lattice-valued nu")
    if batch.inputs is None:
        raise ValueError("batch must be drawn with keep_inputs=True")
    xmax = float(np.abs(batch.inputs).max()) if batch.inputs.size else 0.0
    worst, budget = 0.0, 0.0
    rows = []
    for a in alphas:
        a = as_vector(a)
        if not any(a.components):
            rows.append({"deviation": 0.0, "budget": 0.0})
            continue
        z = pairing_phases(batch, a)
        frac = np.abs(np.angle(z)) / (2 * np.pi)
        dev = float(frac.max())
        beta = right_apply(plan.xi, a)
        off = sum(abs(float(v) - round(float(v))) for comp in beta.components
                  for v in comp.coeffs.values())
        b = xmax * off + 1e-12 * sum(abs(float(v)) for comp in a.components for v in comp.coeffs.values())
        rows.append({"deviation": dev, "budget": b})
        worst = max(worst, dev)
        budget = max(budget, b)
    return {"max_deviation": worst, "budget": budget, "rows": rows,
            "within_budget": all(r["deviation"] <= r["budget"] for r in rows)}


def window_ball(spec: GroupSpec, radius: int) -> tuple:
    return tuple(enumerate_ball(spec, radius))
