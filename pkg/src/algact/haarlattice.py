"""Probability measures on finite groups: convolution powers converging to
Haar measures of joins and generated subgroups, the largest subgroup whose
Haar measure lies in a closed class of measures, and coset support.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .groups import (GroupError, GroupSpec, SubgroupSet, enumerate_subgroups, join,
                     subgroup_generate, validate_automorphism)

TV_TOL = 1e-12


class ConvergenceError(RuntimeError):
    pass


class ClosureViolation(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Probability vector on a finite group: float array or tuple of Fractions."""

    spec: GroupSpec = field(repr=False)
    probs: object

    def __post_init__(self):
        spec = self.spec
        if not spec.is_finite:
            raise GroupError("FiniteMeasure needs a finite group")
        p = self.probs
        if isinstance(p, np.ndarray) and p.dtype != object:
            p = np.asarray(p, dtype=float)
            if p.shape != (spec.order,):
                raise ValueError("probability vector has the wrong length")
            if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ValueError("not a probability vector")
            p = p.copy()
            p.setflags(write=False)
        else:
            p = tuple(Fraction(x) for x in p)
            if len(p) != spec.order:
                raise ValueError("probability vector has the wrong length")
            if any(x < 0 for x in p) or sum(p) != 1:
                raise ValueError("not a probability vector")
        object.__setattr__(self, "probs", p)

    @property
    def exact(self) -> bool:
        return isinstance(self.probs, tuple)

    def as_array(self) -> np.ndarray:
        return np.asarray([float(x) for x in self.probs]) if self.exact else self.probs

    def support(self) -> tuple:
        return tuple(i for i, x in enumerate(self.probs) if x > 0)

    def mass(self, elements) -> object:
        return sum((self.probs[i] for i in elements), Fraction(0) if self.exact else 0.0)

    def tv(self, other: "FiniteMeasure") -> float:
        return 0.5 * float(np.abs(self.as_array() - other.as_array()).sum())

    def __eq__(self, other):
        if not isinstance(other, FiniteMeasure):
            return NotImplemented
        if self.exact and other.exact:
            return self.probs == other.probs
        return np.array_equal(self.as_array(), other.as_array())

    def __hash__(self):
        return hash(tuple(float(x) for x in self.probs))


def delta(spec: GroupSpec, g, exact: bool = True) -> FiniteMeasure:
    g = spec.normalize(g)
    p = [Fraction(int(i == g)) for i in range(spec.order)]
    return FiniteMeasure(spec, p if exact else np.asarray(p, dtype=float))


def uniform_on(spec: GroupSpec, elements, exact: bool = True) -> FiniteMeasure:
    els = sorted(set(spec.normalize(g) for g in elements))
    if not els:
        raise ValueError("empty support")
    w = Fraction(1, len(els))
    p = [w if i in els else Fraction(0) for i in range(spec.order)]
    return FiniteMeasure(spec, p if exact else np.asarray([float(x) for x in p]))


def haar_of(Y: SubgroupSet, exact: bool = True) -> FiniteMeasure:
    return uniform_on(Y.spec, Y.elements, exact)


def convolve_fm(mu: FiniteMeasure, nu: FiniteMeasure) -> FiniteMeasure:
    """(mu * nu)(z) = sum_{xy = z} mu(x) nu(y)."""
    if mu.spec != nu.spec:
        raise GroupError("measures live on different groups")
    spec = mu.spec
    if mu.exact and nu.exact:
        out = [Fraction(0)] * spec.order
        t = spec.table
        sv = [(y, nu.probs[y]) for y in nu.support()]
        for x in mu.support():
            a, row = mu.probs[x], t[x]
            for y, b in sv:
                out[row[y]] += a * b
        return FiniteMeasure(spec, out)
    T = spec.table_array
    w = np.outer(mu.as_array(), nu.as_array())
    out = np.bincount(T.ravel(), weights=w.ravel(), minlength=spec.order)
    return FiniteMeasure(spec, out / out.sum())


def star_fm(mu: FiniteMeasure) -> FiniteMeasure:
    """mu^*(E) = mu(E^-1)."""
    inv = mu.spec.inverse
    if mu.exact:
        return FiniteMeasure(mu.spec, [mu.probs[inv[g]] for g in range(mu.spec.order)])
    return FiniteMeasure(mu.spec, mu.probs[mu.spec.inverse_array])


def mix(mu: FiniteMeasure, nu: FiniteMeasure, t=Fraction(1, 2)) -> FiniteMeasure:
    if mu.exact and nu.exact:
        t = Fraction(t)
        return FiniteMeasure(mu.spec, [t * a + (1 - t) * b for a, b in zip(mu.probs, nu.probs)])
    t = float(t)
    return FiniteMeasure(mu.spec, t * mu.as_array() + (1 - t) * nu.as_array())


def _l2_to(rho: FiniteMeasure, target: FiniteMeasure) -> float:
    return float(np.sqrt(np.sum((rho.as_array() - target.as_array()) ** 2)))


# -- limits ------------------------------------------------------------------


def join_by_iteration(Y1: SubgroupSet, Y2: SubgroupSet, tol: float = TV_TOL,
                      maxiter: int = 500) -> dict:
    """rho_1 = m_{Y1} * m_{Y2} * m_{Y1}, rho_{n+1} = rho_n * rho_1, until the
    TV step drops below ``tol``; compared against the Haar measure of the
    brute-force join."""
    spec = Y1.spec
    m1, m2 = haar_of(Y1, exact=False), haar_of(Y2, exact=False)
    step = convolve_fm(convolve_fm(m1, m2), m1)
    oracle_group = join(spec, Y1, Y2)
    oracle = haar_of(oracle_group, exact=False)
    rho = step
    overlaps, dists = [float(rho.as_array() @ oracle.as_array())], [_l2_to(rho, oracle)]
    for it in range(1, maxiter + 1):
        nxt = convolve_fm(rho, step)
        d = nxt.tv(rho)
        rho = nxt
        overlaps.append(float(rho.as_array() @ oracle.as_array()))
        dists.append(_l2_to(rho, oracle))
        if d < tol:
            return {"measure": rho, "iterations": it, "last_step": d, "oracle": oracle_group,
                    "tv_to_oracle": rho.tv(oracle), "overlaps": overlaps, "l2_to_oracle": dists}
    raise ConvergenceError(f"join iteration did not settle within {maxiter} steps")


def support_recovery(mu: FiniteMeasure, tol: float = TV_TOL, maxiter: int = 64,
                     exact: bool = False) -> dict:
    """Limit of the convolution powers of mu^* * mu and its support.

    Float mode follows the subsequence (mu^* * mu)^{*2^n} by repeated squaring
    until the TV step is below ``tol``.  Exact mode tracks supports until they
    stabilize on a subgroup Z and returns m_Z.
    """
    spec = mu.spec
    nu = convolve_fm(star_fm(mu), mu)
    oracle_group = subgroup_generate(spec, nu.support())
    if exact:
        supp = set(nu.support())
        t = spec.table
        for it in range(1, maxiter + 1):
            nxt = {t[a][b] for a in supp for b in supp}
            if nxt == supp:
                Y = SubgroupSet(spec, tuple(sorted(supp)))
                return {"measure": haar_of(Y), "subgroup": Y, "iterations": it,
                        "oracle": oracle_group, "tv_to_oracle": 0.0 if Y == oracle_group else 1.0}
            supp = nxt
        raise ConvergenceError("support did not stabilize")
    rho = FiniteMeasure(spec, nu.as_array())
    oracle = haar_of(oracle_group, exact=False)
    for it in range(1, maxiter + 1):
        nxt = convolve_fm(rho, rho)
        d = nxt.tv(rho)
        rho = nxt
        if d < tol:
            Y = SubgroupSet(spec, rho.support())
            return {"measure": rho, "subgroup": Y, "iterations": it, "last_step": d,
                    "oracle": oracle_group, "tv_to_oracle": rho.tv(oracle)}
    raise ConvergenceError(f"convolution powers did not settle within {maxiter} squarings")


# -- predicate classes -------------------------------------------------------


@dataclass(frozen=True)
class PredicateClass:
    """A class of measures given by a membership oracle.

    ``allowed`` restricts supports and ``automorphisms`` lists permutations
    the measures must be invariant under; both feed the random member sampler.
    Closure under convolution, star and limits is the caller's contract
    (``declared_closed``); ``audit_closure`` spot-checks it.
    """

    name: str
    oracle: Callable[[FiniteMeasure], bool] = field(repr=False)
    declared_closed: bool = True
    allowed: frozenset | None = None
    automorphisms: tuple = ()

    def __call__(self, mu: FiniteMeasure) -> bool:
        return bool(self.oracle(mu))

    def contains(self, mu: FiniteMeasure) -> bool:
        return self(mu)


def _is_zero(x) -> bool:
    return x == 0 if isinstance(x, Fraction) else abs(x) <= 1e-12


def support_in(H: SubgroupSet) -> PredicateClass:
    hs = H.as_set

    def oracle(mu):
        return all(_is_zero(x) or i in hs for i, x in enumerate(mu.probs))

    return PredicateClass(f"supportin({','.join(H.names())})", oracle, True, frozenset(hs), ())


def invariant_under(spec: GroupSpec, autos: Sequence[Sequence[int]], name: str = "invariant") -> PredicateClass:
    perms = tuple(validate_automorphism(spec, a) for a in autos)

    def oracle(mu):
        p = mu.probs
        return all(_is_zero(p[a[i]] - p[i]) for a in perms for i in range(spec.order))

    return PredicateClass(name, oracle, True, None, perms)


def intersection(*preds: PredicateClass) -> PredicateClass:
    allowed = None
    for p in preds:
        if p.allowed is not None:
            allowed = p.allowed if allowed is None else allowed & p.allowed
    autos = tuple(a for p in preds for a in p.automorphisms)
    return PredicateClass("&".join(p.name for p in preds), lambda mu: all(p(mu) for p in preds),
                          all(p.declared_closed for p in preds), allowed, autos)


def coordinate_shift(spec: GroupSpec) -> tuple:
    """Cyclic shift of coordinates (a, b, c, ...) -> (b, c, ..., a) on (Z/n)^r,
    read off element names; identity permutation otherwise."""
    names = spec.names
    if not names:
        raise GroupError("coordinate shift needs digit-string element names")
    idx = {n: i for i, n in enumerate(names)}
    return tuple(idx[n[1:] + n[0]] for n in names)


def conjugation(spec: GroupSpec, g) -> tuple:
    """x -> g x g^-1."""
    g = spec.normalize(g)
    gi = spec.inv(g)
    return tuple(spec.mul(spec.mul(g, x), gi) for x in range(spec.order))


def _orbits(spec: GroupSpec, perms) -> list:
    seen, out = set(), []
    for x in range(spec.order):
        if x in seen:
            continue
        orb, frontier = {x}, [x]
        while frontier:
            y = frontier.pop()
            for a in perms:
                z = a[y]
                if z not in orb:
                    orb.add(z)
                    frontier.append(z)
        seen |= orb
        out.append(sorted(orb))
    return out


def random_member(spec: GroupSpec, P: PredicateClass, rng: np.random.Generator,
                  exact: bool = True, max_denominator: int = 12) -> FiniteMeasure:
    """A random measure in P: random weights on whole automorphism orbits that
    fit inside the allowed support, spread uniformly over each orbit."""
    allowed = P.allowed if P.allowed is not None else frozenset(range(spec.order))
    orbits = [o for o in _orbits(spec, P.automorphisms) if set(o) <= allowed]
    if not orbits:
        raise ValueError(f"predicate {P.name} admits no probability measure")
    chosen = [o for o in orbits if rng.random() < 0.5] or [orbits[int(rng.integers(len(orbits)))]]
    w = [int(rng.integers(1, max_denominator + 1)) for _ in chosen]
    total = sum(w)
    p = [Fraction(0)] * spec.order
    for o, wi in zip(chosen, w):
        for x in o:
            p[x] += Fraction(wi, total * len(o))
    mu = FiniteMeasure(spec, p) if exact else FiniteMeasure(spec, np.asarray([float(x) for x in p]))
    if not P(mu):
        raise ClosureViolation(f"sampler produced a non-member of {P.name}")
    return mu


def audit_closure(spec: GroupSpec, P: PredicateClass, rng: np.random.Generator, probes: int = 100) -> dict:
    """Spot-check closure of P under convolution, star and mixtures."""
    fails = []
    for i in range(probes):
        a, b = random_member(spec, P, rng), random_member(spec, P, rng)
        for label, c in (("convolve", convolve_fm(a, b)), ("star", star_fm(a)), ("mix", mix(a, b))):
            if not P(c):
                fails.append((i, label))
    return {"probes": probes, "violations": fails, "ok": not fails}


def largest_member_subgroup(spec: GroupSpec, P: PredicateClass) -> dict:
    """The join of all subgroups Y with m_Y in P; asserted to be a member."""
    subs = enumerate_subgroups(spec)
    members = [Y for Y in subs if P(haar_of(Y))]
    if not members:
        raise ClosureViolation(f"no subgroup has its Haar measure in {P.name}")
    Y = join(spec, *members)
    if not P(haar_of(Y)):
        raise ClosureViolation(f"join of member subgroups is not a member of {P.name}")
    return {"Y": Y, "members": members, "subgroups_checked": len(subs),
            "upper_bound": all(M.issubset(Y) for M in members)}


def coset_support_check(nu: FiniteMeasure, Y: SubgroupSet) -> dict:
    """supp(nu^* * nu) within Y, and the left coset xY carrying nu."""
    spec = nu.spec
    inner = convolve_fm(star_fm(nu), nu)
    inner_ok = set(inner.support()) <= Y.as_set
    supp = nu.support()
    x = supp[0]
    coset = tuple(sorted({spec.mul(x, y) for y in Y.elements}))
    leak = nu.mass(set(range(spec.order)) - set(coset))
    return {"inner_support_ok": inner_ok, "representative": x, "coset": coset,
            "max_leak": leak, "ok": inner_ok and leak == 0}


def random_measure(spec: GroupSpec, rng: np.random.Generator) -> FiniteMeasure:
    """Random float measure with a random support of random size."""
    n = spec.order
    size = int(rng.integers(1, n + 1))
    supp = rng.choice(n, size=size, replace=False)
    w = np.zeros(n)
    w[supp] = rng.random(size) + 0.05
    return FiniteMeasure(spec, w / w.sum())


def parse_predicate(text: str, spec: GroupSpec, load_subgroup=None) -> PredicateClass:
    """``supportin:<subgroup>``, ``invariant:shift``, ``invariant:conj(<elem>)``,
    ``invariant:[perm]`` joined by '&'."""
    import json
    import re
    preds = []
    for part in text.split("&"):
        kind, _, arg = part.strip().partition(":")
        kind = kind.strip().lower()
        arg = arg.strip()
        if kind == "supportin":
            H = load_subgroup(arg) if load_subgroup else None
            if H is None:
                raise ValueError(f"cannot resolve subgroup {arg!r}")
            preds.append(support_in(H))
        elif kind == "invariant":
            if arg == "shift":
                preds.append(invariant_under(spec, [coordinate_shift(spec)], "invariant:shift"))
            elif m := re.fullmatch(r"conj\((.+)\)", arg):
                g = spec.element_by_name(m.group(1))
                preds.append(invariant_under(spec, [conjugation(spec, g)], f"invariant:{arg}"))
            elif arg.startswith("["):
                preds.append(invariant_under(spec, [json.loads(arg)], "invariant:perm"))
            else:
                raise ValueError(f"unknown invariance {arg!r}")
        else:
            raise ValueError(f"unknown predicate kind {kind!r}")
    return preds[0] if len(preds) == 1 else intersection(*preds)
