"""Sparse group-ring arithmetic: finitely supported coefficient maps G -> R,
matrices of them, and vectors over G.

Coefficients are floats by default. Ints and ``Fraction`` coefficients stay
exact through every operation (mixing with a float gives a float).
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Number
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .groups import BackendMismatch, GroupError, GroupSpec


def _check_same(a: GroupSpec, b: GroupSpec) -> None:
    if a is not b and a != b:
        raise BackendMismatch(f"group mismatch: {a!r} vs {b!r}")


class RingElement:
    """Finitely supported map G -> R with convolution product.

    Instances are immutable; zero coefficients are never stored.
    """

    __slots__ = ("spec", "_c", "_hash")

    def __init__(self, spec: GroupSpec, coeffs: Mapping | Iterable = ()):
        self.spec = spec
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        c = {}
        for g, v in items:
            g = spec.normalize(g)
            c[g] = c.get(g, 0) + v
        self._c = {g: v for g, v in c.items() if v != 0}
        self._hash = None

    @classmethod
    def _raw(cls, spec, c: dict) -> "RingElement":
        obj = cls.__new__(cls)
        obj.spec = spec
        obj._c = {g: v for g, v in c.items() if v != 0}
        obj._hash = None
        return obj

    @classmethod
    def zero(cls, spec: GroupSpec) -> "RingElement":
        return cls._raw(spec, {})

    @classmethod
    def delta(cls, spec: GroupSpec, g=None, coeff=1) -> "RingElement":
        g = spec.identity if g is None else spec.normalize(g)
        return cls._raw(spec, {g: coeff})

    @classmethod
    def one(cls, spec: GroupSpec) -> "RingElement":
        return cls.delta(spec)

    # -- access ----------------------------------------------------------

    @property
    def coeffs(self) -> Mapping:
        return MappingProxyType(self._c)

    @property
    def support(self) -> list:
        return sorted(self._c, key=self.spec.sort_key)

    def items(self) -> list:
        return [(g, self._c[g]) for g in self.support]

    def __getitem__(self, g):
        return self._c.get(self.spec.normalize(g), 0)

    def __len__(self) -> int:
        return len(self._c)

    def __bool__(self) -> bool:
        return bool(self._c)

    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self._c.values())

    def is_integral(self) -> bool:
        return all(v == int(v) if isinstance(v, (int, Fraction)) else float(v).is_integer()
                   for v in self._c.values())

    def radius(self) -> int:
        return max((self.spec.radius(g) for g in self._c), default=0)

    def to_float(self) -> "RingElement":
        return RingElement._raw(self.spec, {g: float(v) for g, v in self._c.items()})

    def to_exact(self) -> "RingElement":
        return RingElement._raw(self.spec, {g: Fraction(v) for g, v in self._c.items()})

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Number):
            other = RingElement.delta(self.spec, coeff=other)
        if not isinstance(other, RingElement):
            return NotImplemented
        _check_same(self.spec, other.spec)
        c = dict(self._c)
        for g, v in other._c.items():
            c[g] = c.get(g, 0) + v
        return RingElement._raw(self.spec, c)

    __radd__ = __add__

    def __neg__(self):
        return RingElement._raw(self.spec, {g: -v for g, v in self._c.items()})

    def __sub__(self, other):
        if isinstance(other, Number):
            other = RingElement.delta(self.spec, coeff=other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "RingElement":
        return RingElement._raw(self.spec, {g: s * v for g, v in self._c.items()})

    def __mul__(self, other):
        if isinstance(other, RingElement):
            return convolve(self, other)
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, s):
        if isinstance(s, int) and self.is_exact():
            s = Fraction(s)
        return self.scale(1 / s)

    def star(self) -> "RingElement":
        """Involution a*(g) = a(g^-1) (real coefficients)."""
        inv = self.spec.inv
        return RingElement._raw(self.spec, {inv(g): v for g, v in self._c.items()})

    def shift_left(self, g) -> "RingElement":
        """(lambda(g) a)(h) = a(g^-1 h), i.e. delta_g * a."""
        g = self.spec.normalize(g)
        mul = self.spec.mul
        return RingElement._raw(self.spec, {mul(g, h): v for h, v in self._c.items()})

    def shift_right(self, g) -> "RingElement":
        """(rho(g) a)(h) = a(h g), i.e. a * delta_{g^-1}."""
        g = self.spec.normalize(g)
        mul, ginv = self.spec.mul, self.spec.inv(g)
        return RingElement._raw(self.spec, {mul(h, ginv): v for h, v in self._c.items()})

    def l2_norm_sq(self):
        return sum(v * v for v in self._c.values())

    def l2_norm(self) -> float:
        return math.sqrt(float(self.l2_norm_sq()))

    def l1_norm(self) -> float:
        return float(sum(abs(v) for v in self._c.values()))

    def max_abs(self) -> float:
        return float(max((abs(v) for v in self._c.values()), default=0))

    def truncate(self, radius: int) -> "RingElement":
        r = self.spec.radius
        return RingElement._raw(self.spec, {g: v for g, v in self._c.items() if r(g) <= radius})

    # -- comparisons -----------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Number):
            other = RingElement.delta(self.spec, coeff=other) if other else RingElement.zero(self.spec)
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.spec == other.spec and self._c == other._c

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self.items()))
        return self._hash

    def allclose(self, other: "RingElement", atol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= atol

    def __repr__(self):
        return f"RingElement({format_ring_expr(self)!r})"


def convolve(a: RingElement, b: RingElement) -> RingElement:
    """(ab)(g) = sum_h a(h) b(h^-1 g)."""
    _check_same(a.spec, b.spec)
    mul = a.spec.mul
    out: dict = {}
    bi = list(b._c.items())
    for h, x in a._c.items():
        for k, y in bi:
            g = mul(h, k)
            out[g] = out.get(g, 0) + x * y
    return RingElement._raw(a.spec, out)


def star(a):
    return a.star()


# -- matrices ----------------------------------------------------------------


class RingMatrix:
    """m x k matrix with group-ring entries; all entries share one group."""

    __slots__ = ("spec", "entries")

    def __init__(self, entries: Sequence[Sequence[RingElement]], spec: GroupSpec | None = None):
        rows = tuple(tuple(r) for r in entries)
        if not rows or not rows[0]:
            raise ValueError("RingMatrix needs at least one row and column")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged RingMatrix")
        spec = spec or rows[0][0].spec
        for r in rows:
            for e in r:
                _check_same(spec, e.spec)
        self.spec = spec
        self.entries = rows

    @classmethod
    def scalar(cls, a: RingElement) -> "RingMatrix":
        return cls([[a]])

    @classmethod
    def identity(cls, spec: GroupSpec, n: int, coeff=1) -> "RingMatrix":
        """delta_1 (x) id."""
        return cls([[RingElement.delta(spec, coeff=coeff) if i == j else RingElement.zero(spec)
                     for j in range(n)] for i in range(n)], spec)

    @classmethod
    def zeros(cls, spec: GroupSpec, m: int, k: int) -> "RingMatrix":
        return cls([[RingElement.zero(spec)] * k for _ in range(m)], spec)

    @property
    def shape(self) -> tuple:
        return len(self.entries), len(self.entries[0])

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def __getitem__(self, ij) -> RingElement:
        i, j = ij
        return self.entries[i][j]

    def map(self, fn) -> "RingMatrix":
        return RingMatrix([[fn(e) for e in r] for r in self.entries], self.spec)

    def star(self) -> "RingMatrix":
        """(A*)_ij = (A_ji)*."""
        m, k = self.shape
        return RingMatrix([[self.entries[j][i].star() for j in range(m)] for i in range(k)], self.spec)

    def __add__(self, other: "RingMatrix") -> "RingMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return RingMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)],
                          self.spec)

    def __neg__(self):
        return self.map(lambda e: -e)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "RingMatrix":
        return self.map(lambda e: e.scale(s))

    def __matmul__(self, other: "RingMatrix") -> "RingMatrix":
        return matmul(self, other)

    def l2_norm_sq(self):
        return sum(e.l2_norm_sq() for r in self.entries for e in r)

    def l2_norm(self) -> float:
        return math.sqrt(float(self.l2_norm_sq()))

    def radius(self) -> int:
        return max(e.radius() for r in self.entries for e in r)

    def support(self) -> list:
        s = set()
        for r in self.entries:
            for e in r:
                s.update(e.coeffs)
        return sorted(s, key=self.spec.sort_key)

    def is_exact(self) -> bool:
        return all(e.is_exact() for r in self.entries for e in r)

    def truncate(self, radius: int) -> "RingMatrix":
        return self.map(lambda e: e.truncate(radius))

    def shift_right(self, g) -> "RingMatrix":
        return self.map(lambda e: e.shift_right(g))

    def __eq__(self, other):
        if not isinstance(other, RingMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def allclose(self, other: "RingMatrix", atol: float = 1e-12) -> bool:
        return self.shape == other.shape and all(
            a.allclose(b, atol) for r, s in zip(self.entries, other.entries) for a, b in zip(r, s))

    def __repr__(self):
        return f"RingMatrix({format_matrix_expr(self)!r})"


def as_matrix(x) -> RingMatrix:
    if isinstance(x, RingMatrix):
        return x
    if isinstance(x, RingElement):
        return RingMatrix.scalar(x)
    raise TypeError(f"expected RingElement or RingMatrix, got {type(x).__name__}")


def matmul(a: RingMatrix, b: RingMatrix) -> RingMatrix:
    """(ab)_ij = sum_l a_il b_lj with convolution products."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a.spec, b.spec)
    m, n = a.shape
    n2, k = b.shape
    if n != n2:
        raise ValueError(f"inner dimensions differ: {a.shape} x {b.shape}")
    out = []
    for i in range(m):
        row = []
        for j in range(k):
            acc = RingElement.zero(a.spec)
            for l in range(n):
                if a.entries[i][l] and b.entries[l][j]:
                    acc = acc + convolve(a.entries[i][l], b.entries[l][j])
            row.append(acc)
        out.append(row)
    return RingMatrix(out, a.spec)


def mat_product_left(f: RingMatrix, xi: RingMatrix) -> RingMatrix:
    """f xi for f m x n, xi n x k."""
    return matmul(f, xi)


def mat_product_right(xi: RingMatrix, f: RingMatrix) -> RingMatrix:
    """xi f for xi k x m, f m x n."""
    return matmul(xi, f)


def l2_norm(x) -> float:
    return x.l2_norm()


# -- vectors over G ----------------------------------------------------------


class VectorOverG:
    """Finitely supported map G -> R^k, stored as k component ring elements."""

    __slots__ = ("spec", "components")

    def __init__(self, components: Sequence[RingElement], spec: GroupSpec | None = None):
        comps = tuple(components)
        if not comps:
            raise ValueError("VectorOverG needs at least one component")
        spec = spec or comps[0].spec
        for c in comps:
            _check_same(spec, c.spec)
        self.spec = spec
        self.components = comps

    @classmethod
    def from_mapping(cls, spec: GroupSpec, values: Mapping, k: int | None = None) -> "VectorOverG":
        """Build from ``{g: k-vector}`` (scalars allowed when k == 1)."""
        vals = {spec.normalize(g): (tuple(v) if isinstance(v, (list, tuple)) or hasattr(v, "__len__")
                                    else (v,)) for g, v in values.items()}
        if k is None:
            k = len(next(iter(vals.values()))) if vals else 1
        comps = [RingElement(spec, {g: v[l] for g, v in vals.items()}) for l in range(k)]
        return cls(comps, spec)

    @classmethod
    def scalar(cls, a: RingElement) -> "VectorOverG":
        return cls([a])

    @classmethod
    def zeros(cls, spec: GroupSpec, k: int) -> "VectorOverG":
        return cls([RingElement.zero(spec)] * k, spec)

    @property
    def k(self) -> int:
        return len(self.components)

    def __getitem__(self, l: int) -> RingElement:
        return self.components[l]

    def support(self) -> list:
        s = set()
        for c in self.components:
            s.update(c.coeffs)
        return sorted(s, key=self.spec.sort_key)

    def value(self, g) -> tuple:
        return tuple(c[g] for c in self.components)

    def to_mapping(self) -> dict:
        return {g: self.value(g) for g in self.support()}

    def __add__(self, other: "VectorOverG") -> "VectorOverG":
        if self.k != other.k:
            raise ValueError("component count mismatch")
        return VectorOverG([a + b for a, b in zip(self.components, other.components)], self.spec)

    def __neg__(self):
        return VectorOverG([-c for c in self.components], self.spec)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "VectorOverG":
        return VectorOverG([c.scale(s) for c in self.components], self.spec)

    def l2_norm_sq(self):
        return sum(c.l2_norm_sq() for c in self.components)

    def l2_norm(self) -> float:
        return math.sqrt(float(self.l2_norm_sq()))

    def is_integral(self) -> bool:
        return all(c.is_integral() for c in self.components)

    def max_frac_distance(self) -> float:
        """Largest distance of any coordinate to the nearest integer."""
        worst = 0.0
        for c in self.components:
            for v in c.coeffs.values():
                worst = max(worst, float(abs(v - round(v))))
        return worst

    def __eq__(self, other):
        if not isinstance(other, VectorOverG):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def allclose(self, other: "VectorOverG", atol: float = 1e-12) -> bool:
        return self.k == other.k and all(a.allclose(b, atol) for a, b in zip(self.components, other.components))

    def __repr__(self):
        return "VectorOverG(" + ", ".join(repr(format_ring_expr(c)) for c in self.components) + ")"


def as_vector(x) -> VectorOverG:
    if isinstance(x, VectorOverG):
        return x
    if isinstance(x, RingElement):
        return VectorOverG([x])
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], RingElement):
        return VectorOverG(x)
    raise TypeError(f"expected VectorOverG, got {type(x).__name__}")


def right_apply(xi, zeta) -> VectorOverG:
    """r(xi) zeta for xi k x m, zeta with k components:
    (r(xi) zeta)(j) = sum_l zeta(l) * xi_lj."""
    xi, zeta = as_matrix(xi), as_vector(zeta)
    _check_same(xi.spec, zeta.spec)
    k, m = xi.shape
    if zeta.k != k:
        raise ValueError(f"right_apply: vector has {zeta.k} components, matrix has {k} rows")
    out = []
    for j in range(m):
        acc = RingElement.zero(xi.spec)
        for l in range(k):
            if zeta.components[l] and xi.entries[l][j]:
                acc = acc + convolve(zeta.components[l], xi.entries[l][j])
        out.append(acc)
    return VectorOverG(out, xi.spec)


def left_apply(xi, zeta) -> VectorOverG:
    """lambda(xi) zeta for xi k x m, zeta with m components:
    (lambda(xi) zeta)(j) = sum_l xi_jl * zeta(l)."""
    xi, zeta = as_matrix(xi), as_vector(zeta)
    _check_same(xi.spec, zeta.spec)
    k, m = xi.shape
    if zeta.k != m:
        raise ValueError(f"left_apply: vector has {zeta.k} components, matrix has {m} columns")
    out = []
    for j in range(k):
        acc = RingElement.zero(xi.spec)
        for l in range(m):
            if xi.entries[j][l] and zeta.components[l]:
                acc = acc + convolve(xi.entries[j][l], zeta.components[l])
        out.append(acc)
    return VectorOverG(out, xi.spec)


# -- text grammar ------------------------------------------------------------
#
#   expr  := ['+'|'-'] term (('+'|'-') term)*
#   term  := factor ('*' factor)*
#   factor:= coeff | gen ['^' ['-'] int]
#   gen   := 'u' int | 'e' | identifier | cycle like (12)(34) | '[' name ']'
#   coeff := decimal | p/q
#
# '[...]' names any element: '[011]' in (Z/2)^3, '[3]' by index, '[1,-2]' in Z^2.


class RingSyntaxError(ValueError):
    """Parse failure; ``pos`` is the 0-based offset into ``text``."""

    def __init__(self, msg: str, text: str, pos: int):
        self.msg, self.text, self.pos = msg, text, pos
        super().__init__(f"{msg} at position {pos}\n  {text}\n  {' ' * pos}^")


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?(?:/\d+)?)
  | (?P<gen>u\d+)
  | (?P<cycle>(?:\(\d+\))+)
  | (?P<bracket>\[[^\[\]]*\])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^])
""", re.VERBOSE)


def _tokenize(text: str) -> list:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise RingSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            toks.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


def _number(tok: str, exact: bool):
    if "/" in tok:
        p, q = tok.split("/")
        if "." in p or "e" in p.lower():
            return float(p) / int(q) if not exact else Fraction(p) / int(q)
        return Fraction(int(p), int(q))
    if re.fullmatch(r"\d+", tok):
        return int(tok)
    return Fraction(tok) if exact else float(tok)


class _Parser:
    def __init__(self, text: str, spec: GroupSpec, exact: bool):
        self.text, self.spec, self.exact = text, spec, exact
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise RingSyntaxError(msg, self.text, tok[2])

    def parse(self) -> RingElement:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        acc: dict = {}
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        while True:
            c, g = self.term()
            acc[g] = acc.get(g, 0) + sign * c
            kind, val, _ = self.peek()
            if kind == "end":
                break
            if kind == "op" and val in "+-":
                self.take()
                sign = -1 if val == "-" else 1
                continue
            self.fail(f"expected '+', '-' or end, got {val!r}")
        return RingElement(self.spec, acc)

    def term(self):
        coeff, g = 1, self.spec.identity
        coeff, g = self.factor(coeff, g)
        while self.peek()[:2] == ("op", "*"):
            self.take()
            coeff, g = self.factor(coeff, g)
        return coeff, g

    def factor(self, coeff, g):
        kind, val, pos = tok = self.take()
        if kind == "num":
            return coeff * _number(val, self.exact), g
        if kind in ("gen", "ident", "cycle", "bracket"):
            h = self.element(tok)
            if self.peek()[:2] == ("op", "^"):
                self.take()
                neg = False
                if self.peek()[:2] == ("op", "-"):
                    self.take()
                    neg = True
                kind2, val2, _ = self.peek()
                if kind2 != "num" or not val2.isdigit():
                    self.fail("expected integer exponent")
                self.take()
                h = self.spec.power(h, -int(val2) if neg else int(val2))
            return coeff, self.spec.mul(g, h)
        if kind == "end":
            self.fail("unexpected end of expression", tok)
        self.fail(f"expected coefficient or generator, got {val!r}", tok)

    def element(self, tok):
        kind, val, pos = tok
        try:
            if kind == "gen":
                return self.spec.generator(int(val[1:]))
            if kind == "bracket":
                inner = val[1:-1].strip()
                if self.spec.is_finite and inner.isdigit() and not self.spec.names:
                    return self.spec.normalize(int(inner))
                try:
                    return self.spec.element_by_name(inner)
                except GroupError:
                    if self.spec.is_finite and inner.isdigit():
                        return self.spec.normalize(int(inner))
                    raise
            if val == "e":
                return self.spec.identity
            if not self.spec.is_finite:
                raise GroupError(f"unknown generator {val!r} for Z^{self.spec.d}")
            return self.spec.element_by_name(val)
        except GroupError as exc:
            raise RingSyntaxError(str(exc), self.text, pos) from None


def parse_ring_expr(text: str, spec: GroupSpec, exact: bool = False) -> RingElement:
    """Parse a group-ring expression such as ``"4 - u1 - u1^-1"``.

    Integers and ``p/q`` stay exact; decimals become floats unless ``exact``.
    """
    return _Parser(text, spec, exact).parse()


def _split_top(text: str, sep: str) -> list:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append((start, text[start:i]))
            start = i + 1
    parts.append((start, text[start:]))
    return parts


def parse_matrix_expr(text: str, spec: GroupSpec, exact: bool = False) -> RingMatrix:
    """Rows separated by ';', entries by ','. A plain expression gives a 1x1 matrix."""
    rows = []
    for rstart, rtext in _split_top(text, ";"):
        row = []
        for cstart, ctext in _split_top(rtext, ","):
            off = rstart + cstart
            try:
                row.append(parse_ring_expr(ctext, spec, exact))
            except RingSyntaxError as exc:
                raise RingSyntaxError(exc.msg, text, off + exc.pos) from None
        rows.append(row)
    if len({len(r) for r in rows}) != 1:
        raise RingSyntaxError("rows have different lengths", text, 0)
    return RingMatrix(rows, spec)


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|(?:\(\d+\))+")


def _format_coeff(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, float):
        return repr(c)
    return str(c)


def _format_element(spec: GroupSpec, g) -> str:
    if not spec.is_finite:
        parts = []
        for i, a in enumerate(g):
            if a == 0:
                continue
            parts.append(f"u{i + 1}" if a == 1 else f"u{i + 1}^{a}")
        return "*".join(parts)
    if g == spec.identity_index:
        return ""
    name = spec.name_of(g)
    if _IDENT_RE.fullmatch(name) and not re.fullmatch(r"u\d+|e", name):
        return name
    return f"[{name}]"


def format_ring_expr(a: RingElement) -> str:
    if not a:
        return "0"
    out = []
    for g, c in a.items():
        mono = _format_element(a.spec, g)
        neg = c < 0
        mag = -c if neg else c
        if not mono:
            body = _format_coeff(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_coeff(mag)}*{mono}"
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def format_matrix_expr(m: RingMatrix) -> str:
    return "; ".join(", ".join(format_ring_expr(e) for e in row) for row in m.entries)
