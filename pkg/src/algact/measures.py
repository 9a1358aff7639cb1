"""Base probability laws on R^k / Z^k with closed-form Fourier transforms,
samplers, moment metadata, and the ell^p non-extendability witness.

Fourier convention: nu_hat(t) = E exp(2 pi i <t, X>).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

GEOM_SAMPLE_CUTOFF = 64


class MeasureError(ValueError):
    pass


class NoWitnessError(MeasureError):
    pass


def _as_t(t, k: int) -> np.ndarray:
    """Coerce t into shape (N, k); scalars broadcast only when k == 1."""
    a = np.asarray(t, dtype=float)
    if a.ndim == 0:
        if k != 1:
            raise MeasureError(f"scalar t given for a measure on R^{k}")
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1) if a.shape[0] == k else a.reshape(-1, 1) if k == 1 else None
        if a is None:
            raise MeasureError(f"t has wrong length for R^{k}")
    if a.shape[-1] != k:
        raise MeasureError(f"t has last dimension {a.shape[-1]}, expected {k}")
    return a


def _product_one_minus(parts: np.ndarray) -> np.ndarray:
    """1 - prod_j (1 - a_j) along the last axis, accurate when every a_j is tiny."""
    small = np.all(np.abs(parts) < 0.5, axis=-1)
    safe = np.where(small[..., None], parts, 0)
    via_log = -np.expm1(np.sum(np.log1p(-safe), axis=-1))
    direct = 1 - np.prod(1 - parts, axis=-1)
    return np.where(small, via_log, direct)


class BaseMeasure:
    """Common interface; subclasses set ``k`` and implement the kernels."""

    k: int

    def fourier(self, t):
        """nu_hat at t; returns a complex scalar for a single point, else an array."""
        a = _as_t(t, self.k)
        out = 1.0 - self._one_minus(a)
        return complex(out[0]) if np.ndim(t) <= 1 and out.shape[0] == 1 else out

    def one_minus_fourier(self, t):
        """1 - nu_hat(t), computed without cancellation near t = 0."""
        a = _as_t(t, self.k)
        out = self._one_minus(a)
        return complex(out[0]) if np.ndim(t) <= 1 and out.shape[0] == 1 else out

    def _one_minus(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n i.i.d. draws, shape (n, k); integer dtype for lattice laws."""
        raise NotImplementedError

    @property
    def mean(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def m2(self) -> float:
        """E ||X||_2^2."""
        raise NotImplementedError

    @property
    def integer_valued(self) -> bool:
        return False

    @property
    def is_point_mass_zero(self) -> bool:
        return self.m2 == 0 and not np.any(self.mean)

    def describe(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()}>"


@dataclass(frozen=True, repr=False)
class UniformInt(BaseMeasure):
    """Uniform on {-n, ..., n} in each of k independent coordinates."""

    n: int
    k: int = 1

    def __post_init__(self):
        if self.n < 0 or self.k < 1:
            raise MeasureError("UniformInt needs n >= 0, k >= 1")

    def _one_minus(self, t):
        n = self.n
        if n == 0:
            return np.zeros(t.shape[0], dtype=complex)
        l = np.arange(1, n + 1)
        per = (4.0 / (2 * n + 1)) * np.sum(np.sin(np.pi * t[..., None] * l) ** 2, axis=-1)
        return _product_one_minus(per).astype(complex)

    def sample(self, rng, n):
        return rng.integers(-self.n, self.n + 1, size=(n, self.k), dtype=np.int64)

    @property
    def mean(self):
        return np.zeros(self.k)

    @property
    def m2(self):
        return self.k * self.n * (self.n + 1) / 3

    @property
    def m2_exact(self) -> Fraction:
        return Fraction(self.k * self.n * (self.n + 1), 3)

    @property
    def integer_valued(self):
        return True

    def atoms_1d(self) -> list:
        p = Fraction(1, 2 * self.n + 1)
        return [(l, p) for l in range(-self.n, self.n + 1)]

    def describe(self):
        return f"uniformint({self.n})^{self.k}"


def dirichlet(n: int, t):
    """Fourier transform of the uniform law on {-n..n}: sin(pi(2n+1)t)/((2n+1) sin(pi t)),
    equal to 1 at integers."""
    t = np.asarray(t, dtype=float)
    s = np.sin(np.pi * t)
    near_int = np.isclose(t, np.round(t), rtol=0, atol=1e-15)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.sin(np.pi * (2 * n + 1) * t) / ((2 * n + 1) * s)
    # at integers the kernel is (+-1)^(2n) = 1
    return np.where(near_int, 1.0, val)


@dataclass(frozen=True, repr=False)
class GeometricSym(BaseMeasure):
    """P(l) = 2^{-|l|} / 3 on Z, independently in k coordinates."""

    k: int = 1

    def _one_minus(self, t):
        per = 8 * np.sin(np.pi * t) ** 2 / (5 - 4 * np.cos(2 * np.pi * t))
        return _product_one_minus(per).astype(complex)

    def sample(self, rng, n):
        c = GEOM_SAMPLE_CUTOFF
        vals = np.arange(-c, c + 1)
        w = np.ldexp(1.0, -np.abs(vals)) / 3
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        u = rng.random((n, self.k))
        return vals[np.searchsorted(cdf, u, side="right").clip(0, 2 * c)].astype(np.int64)

    @property
    def mean(self):
        return np.zeros(self.k)

    @property
    def m2(self):
        return 4.0 * self.k

    @property
    def integer_valued(self):
        return True

    def describe(self):
        return f"geom2^{self.k}"


@dataclass(frozen=True, repr=False)
class Gaussian(BaseMeasure):
    """Centered Gaussian with nu_hat(t) = exp(-delta ||t||^2); the real-space
    variance per coordinate is delta / (2 pi^2)."""

    delta: float
    k: int = 1

    def __post_init__(self):
        if not self.delta > 0:
            raise MeasureError("Gaussian needs delta > 0")

    @property
    def sigma2(self) -> float:
        return self.delta / (2 * math.pi ** 2)

    def _one_minus(self, t):
        return (-np.expm1(-self.delta * np.sum(t * t, axis=-1))).astype(complex)

    def sample(self, rng, n):
        return rng.normal(0.0, math.sqrt(self.sigma2), size=(n, self.k))

    @property
    def mean(self):
        return np.zeros(self.k)

    @property
    def m2(self):
        return self.k * self.sigma2

    def describe(self):
        return f"gauss({self.delta!r})^{self.k}"


@dataclass(frozen=True, repr=False)
class Convolution(BaseMeasure):
    """Law of X + Y for independent X ~ a, Y ~ b."""

    a: BaseMeasure
    b: BaseMeasure

    def __post_init__(self):
        if self.a.k != self.b.k:
            raise MeasureError("convolution factors live in different dimensions")

    @property
    def k(self):
        return self.a.k

    def _one_minus(self, t):
        x, y = self.a._one_minus(t), self.b._one_minus(t)
        return x + y - x * y

    def sample(self, rng, n):
        x = self.a.sample(rng, n)
        y = self.b.sample(rng, n)
        return x + y

    @property
    def mean(self):
        return self.a.mean + self.b.mean

    @property
    def m2(self):
        # E||X+Y||^2 = m2(a) + m2(b) + 2 <E X, E Y>
        return self.a.m2 + self.b.m2 + 2 * float(np.dot(self.a.mean, self.b.mean))

    @property
    def integer_valued(self):
        return self.a.integer_valued and self.b.integer_valued

    def describe(self):
        return f"conv({self.a.describe()},{self.b.describe()})"


@dataclass(frozen=True, repr=False)
class DiscreteExplicit(BaseMeasure):
    """Finitely many atoms; probabilities may be Fractions and must sum to 1."""

    points: tuple
    probs: tuple
    k: int = field(default=1)

    def __post_init__(self):
        pts = tuple(tuple(p) if isinstance(p, (tuple, list)) else (p,) for p in self.points)
        if not pts or len(pts) != len(self.probs):
            raise MeasureError("DiscreteExplicit needs matching non-empty points and probs")
        k = len(pts[0])
        if any(len(p) != k for p in pts):
            raise MeasureError("atoms have different dimensions")
        if any(p < 0 for p in self.probs):
            raise MeasureError("negative probability")
        total = sum(self.probs)
        exact = all(isinstance(p, (int, Fraction)) for p in self.probs)
        if (total != 1) if exact else abs(total - 1) > 1e-12:
            raise MeasureError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "k", k)

    @property
    def _pts(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @property
    def _p(self) -> np.ndarray:
        return np.asarray([float(p) for p in self.probs])

    def _one_minus(self, t):
        theta = 2 * np.pi * (t @ self._pts.T)
        terms = 2 * np.sin(theta / 2) ** 2 - 1j * np.sin(theta)
        return terms @ self._p

    def sample(self, rng, n):
        idx = rng.choice(len(self.points), size=n, p=self._p / self._p.sum())
        pts = self._pts[idx]
        return pts.astype(np.int64) if self.integer_valued else pts

    @property
    def mean(self):
        return self._p @ self._pts

    @property
    def m2(self):
        return float(self._p @ np.sum(self._pts ** 2, axis=1))

    @property
    def integer_valued(self):
        return all(float(x).is_integer() for p in self.points for x in p)

    def describe(self):
        atoms = ",".join(f"{'(' + ','.join(map(str, p)) + ')' if self.k > 1 else p[0]}:{q}"
                         for p, q in zip(self.points, self.probs))
        return f"discrete({atoms})"


def point_mass(k: int = 1) -> DiscreteExplicit:
    return DiscreteExplicit(((0,) * k,), (1,))


def witness_measure(delta: float, k: int = 1) -> Convolution:
    """eta * gamma_delta with eta the symmetric geometric law."""
    return Convolution(GeometricSym(k), Gaussian(delta, k))


# -- parsing -----------------------------------------------------------------

_POW_RE = re.compile(r"\^(\d+)$")


def _split_args(s: str) -> list:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(s[start:i])
            start = i + 1
    parts.append(s[start:])
    return [p.strip() for p in parts]


def _frac(s: str):
    s = s.strip()
    if "/" in s or re.fullmatch(r"-?\d+", s):
        return Fraction(s)
    return float(s)


def parse_measure(text: str) -> BaseMeasure:
    """Parse ``uniformint(2)^3``, ``geom2^1``, ``gauss(0.1)``,
    ``conv(geom2^1,gauss(0.05))``, ``delta0^2`` or ``discrete(-1:1/4,0:1/2,1:1/4)``."""
    s = text.strip().replace(" ", "")
    low = s.lower()
    if low.startswith("conv(") and low.endswith(")"):
        args = _split_args(s[5:-1])
        if len(args) != 2:
            raise MeasureError("conv takes exactly two measures")
        return Convolution(parse_measure(args[0]), parse_measure(args[1]))
    if low.startswith("discrete(") and low.endswith(")"):
        pts, probs = [], []
        for atom in _split_args(s[9:-1]):
            loc, _, p = atom.rpartition(":")
            if not loc:
                raise MeasureError(f"bad atom {atom!r}; expected point:prob")
            loc = loc.strip("()")
            pts.append(tuple(_frac(x) for x in loc.split(",")))
            probs.append(_frac(p))
        pts = [tuple(int(x) if isinstance(x, Fraction) and x.denominator == 1 else float(x)
                     for x in p) for p in pts]
        return DiscreteExplicit(tuple(pts), tuple(probs))
    k = 1
    if m := _POW_RE.search(low):
        k = int(m.group(1))
        low = low[:m.start()]
    if m := re.fullmatch(r"uniformint\((\d+)\)", low):
        return UniformInt(int(m.group(1)), k)
    if low in ("geom2", "geom", "geometric"):
        return GeometricSym(k)
    if m := re.fullmatch(r"gauss(?:ian)?\(([^)]+)\)", low):
        return Gaussian(float(m.group(1)), k)
    if low in ("delta0", "point", "dirac"):
        return point_mass(k)
    raise MeasureError(f"unknown measure spec {text!r}")


# -- bounds and witnesses ----------------------------------------------------


def fourier_quadratic_bound(nu: BaseMeasure, mean_tol: float = 1e-12) -> float:
    """C = 2 pi^2 m2 with |1 - nu_hat(t)| <= C ||t||^2 (valid for mean-zero nu)."""
    m2 = nu.m2
    if not math.isfinite(m2):
        raise MeasureError("measure does not have a finite second moment")
    if np.max(np.abs(nu.mean), initial=0.0) > mean_tol:
        raise MeasureError("measure is not mean zero")
    return 2 * math.pi ** 2 * m2


@dataclass
class WitnessRow:
    n: int
    coord: int
    t: float
    one_minus: float
    E_size: int
    term_divergent: float
    term_lp: float


def _find_t(nu: BaseMeasure, j: int, n: int, p: float, bisect_steps: int = 60):
    """Largest-ish t in (0, 2^{-n/p}) with |1 - nu_hat(t e_j)| >= 2^n t^p and < 1/2."""
    e = np.zeros(nu.k)
    e[j] = 1.0

    def ok(t):
        v = abs(nu.one_minus_fourier(t * e))
        return v >= 2.0 ** n * t ** p and v < 0.5

    hi = 0.99 * 2.0 ** (-n / p)
    if ok(hi):
        return hi
    t = hi
    for _ in range(1100):
        t *= 0.5
        if t == 0.0:
            return None
        if ok(t):
            break
    else:
        return None
    lo, up = t, 2 * t
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + up)
        if ok(mid):
            lo = mid
        else:
            up = mid
    return lo


def nonextendability_witness(nu: BaseMeasure, p: float, N: int) -> dict:
    """Witness sequence showing the Fourier product cannot extend to ell^p, p > 2.

    For n = 1..N finds t_n with |1 - nu_hat(t_n e_j)| >= 2^n t_n^p and
    t_n < 2^{-n/p}, sets |E_n| = ceil(2^{-n} / t_n^p), and reports partial sums
    of sum_n |1 - nu_hat(t_n e_j)| |E_n| (>= n, divergent) and of
    sum_n |E_n| t_n^p (< 2, bounded).
    """
    if p <= 2:
        raise ValueError("construction needs p > 2")
    if nu.is_point_mass_zero:
        raise NoWitnessError("no witness: nu is the point mass at 0")
    rows = []
    tried = []
    for n in range(1, N + 1):
        found = None
        for j in range(nu.k):
            t = _find_t(nu, j, n, p)
            if t is not None:
                found = (j, t)
                break
        if found is None:
            tried.append(n)
            raise NoWitnessError(f"no coordinate gives a witness at n={n} within machine precision")
        j, t = found
        e = np.zeros(nu.k)
        e[j] = t
        om = abs(nu.one_minus_fourier(e))
        tp = t ** p
        E = math.ceil(Fraction(2.0 ** -n) / Fraction(tp))
        rows.append(WitnessRow(n, j, t, om, E, om * E, E * tp))
    div = np.cumsum([r.term_divergent for r in rows]).tolist()
    lp = np.cumsum([r.term_lp for r in rows]).tolist()
    return {
        "measure": nu.describe(), "p": p, "N": N,
        "rows": [{"n": r.n, "coord": r.coord, "t": r.t, "one_minus_fourier": r.one_minus,
                  "E_size": r.E_size, "divergent_term": r.term_divergent, "lp_term": r.term_lp}
                 for r in rows],
        "divergent_partial_sums": div,
        "lp_partial_sums": lp,
    }
