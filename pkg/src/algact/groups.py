"""Concrete group backends: free abelian groups Z^d and finite groups given by
multiplication tables, plus brute-force subgroup machinery.

Elements of Z^d are tuples of ints; elements of a finite group are indices
into its multiplication table.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_SUBGROUP_CAP = 64


class GroupError(ValueError):
    pass


class BackendMismatch(GroupError):
    pass


@dataclass(frozen=True)
class GroupSpec:
    """A countable discrete group.

    ``kind`` is ``"free"`` (Z^d, elements are int tuples of length ``d``) or
    ``"finite"`` (elements are indices ``0 <= i < order``).
    """

    kind: str
    d: int = 0
    order: int = 0
    table: tuple = ()
    inverse: tuple = ()
    identity_index: int = 0
    names: tuple = ()
    generators: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind == "free":
            if self.d < 1:
                raise GroupError("Z^d needs d >= 1")
        elif self.kind == "finite":
            _validate_table(self)
        else:
            raise GroupError(f"unknown group kind {self.kind!r}")

    # -- basic structure -------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def identity(self):
        if self.kind == "free":
            return (0,) * self.d
        return self.identity_index

    @cached_property
    def table_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)

    @cached_property
    def inverse_array(self) -> np.ndarray:
        return np.asarray(self.inverse, dtype=np.int64)

    def mul(self, g, h):
        if self.kind == "free":
            return tuple(a + b for a, b in zip(g, h))
        return self.table[g][h]

    def inv(self, g):
        if self.kind == "free":
            return tuple(-a for a in g)
        return self.inverse[g]

    def elements(self) -> list:
        if self.kind == "free":
            raise GroupError("Z^d is infinite; use enumerate_ball")
        return list(range(self.order))

    def normalize(self, g):
        """Coerce user input (int, list, tuple) into this backend's element type."""
        if self.kind == "free":
            if isinstance(g, (int, np.integer)):
                if self.d != 1:
                    raise GroupError(f"scalar element given for Z^{self.d}")
                return (int(g),)
            t = tuple(int(a) for a in g)
            if len(t) != self.d:
                raise GroupError(f"element {g!r} has wrong length for Z^{self.d}")
            return t
        i = int(g)
        if not 0 <= i < self.order:
            raise GroupError(f"element index {i} out of range for order {self.order}")
        return i

    def sort_key(self, g):
        return g

    def radius(self, g) -> int:
        """Max-norm of a Z^d element (0 for finite groups)."""
        if self.kind == "free":
            return max(abs(a) for a in g) if g else 0
        return 0

    # -- names -----------------------------------------------------------

    def name_of(self, g) -> str:
        if self.kind == "free":
            return str(g)
        if self.names:
            return self.names[g]
        return str(g)

    def element_by_name(self, name: str):
        name = name.strip()
        if self.kind == "free":
            nums = re.findall(r"-?\d+", name)
            return self.normalize([int(x) for x in nums])
        if self.names and name in self._name_index:
            return self._name_index[name]
        if name == "e":
            return self.identity_index
        if re.fullmatch(r"\d+", name) and not self.names:
            return self.normalize(int(name))
        raise GroupError(f"unknown element name {name!r} in group {self.label or self.order}")

    @cached_property
    def _name_index(self) -> dict:
        return {n: i for i, n in enumerate(self.names)}

    def generator(self, i: int):
        """The i-th (1-based) distinguished generator, used by ring expressions ``u1, u2, ...``."""
        if self.kind == "free":
            if not 1 <= i <= self.d:
                raise GroupError(f"generator u{i} does not exist in Z^{self.d}")
            return tuple(1 if j == i - 1 else 0 for j in range(self.d))
        if not 1 <= i <= len(self.generators):
            raise GroupError(f"generator u{i} not defined for {self.label or 'this group'}")
        return self.generators[i - 1]

    def power(self, g, n: int):
        if self.kind == "free":
            return tuple(n * a for a in g)
        if n < 0:
            g, n = self.inv(g), -n
        out = self.identity_index
        for _ in range(n):
            out = self.table[out][g]
        return out

    def __repr__(self):
        if self.kind == "free":
            return f"GroupSpec(Z^{self.d})"
        return f"GroupSpec({self.label or 'finite'}, order={self.order})"


def _validate_table(spec: GroupSpec) -> None:
    n = spec.order
    if n < 1:
        raise GroupError("finite group needs order >= 1")
    t = np.asarray(spec.table, dtype=np.int64)
    if t.shape != (n, n):
        raise GroupError(f"table must be {n}x{n}, got {t.shape}")
    if t.min() < 0 or t.max() >= n:
        raise GroupError("table entries out of range")
    e = spec.identity_index
    ar = np.arange(n)
    if not (np.array_equal(t[e], ar) and np.array_equal(t[:, e], ar)):
        raise GroupError("identity law fails")
    inv = np.asarray(spec.inverse, dtype=np.int64)
    if inv.shape != (n,) or not (np.all(t[ar, inv] == e) and np.all(t[inv, ar] == e)):
        raise GroupError("inverse law fails")
    left = t[t]  # left[a, b, c] = (ab)c
    right = t[ar[:, None, None], t[None, :, :]]  # right[a, b, c] = a(bc)
    if not np.array_equal(left, right):
        raise GroupError("table is not associative")
    if spec.names and len(spec.names) != n:
        raise GroupError("names must list one name per element")


def _inverse_from_table(table, identity: int) -> tuple:
    t = np.asarray(table)
    inv = []
    for a in range(t.shape[0]):
        hits = np.nonzero(t[a] == identity)[0]
        if len(hits) != 1:
            raise GroupError(f"element {a} has no unique inverse")
        inv.append(int(hits[0]))
    return tuple(inv)


def finite_group(table, names=None, generators=None, label="", identity=None) -> GroupSpec:
    """Build a finite GroupSpec from a row-major multiplication table."""
    tab = tuple(tuple(int(x) for x in row) for row in table)
    n = len(tab)
    if identity is None:
        identity = next((a for a in range(n) if tab[a] == tuple(range(n))), None)
        if identity is None:
            raise GroupError("no identity row in table")
    inverse = _inverse_from_table(tab, identity)
    return GroupSpec(
        kind="finite",
        order=n,
        table=tab,
        inverse=inverse,
        identity_index=identity,
        names=tuple(names) if names else (),
        generators=tuple(generators) if generators else (),
        label=label,
    )


def free_abelian(d: int) -> GroupSpec:
    return GroupSpec(kind="free", d=d, label=f"Z^{d}")


def cyclic(n: int) -> GroupSpec:
    table = [[(i + j) % n for j in range(n)] for i in range(n)]
    return finite_group(table, names=[str(i) for i in range(n)],
                        generators=[1 % n], label=f"Z/{n}", identity=0)


def cyclic_product(moduli: Sequence[int]) -> GroupSpec:
    """Direct product Z/n1 x ... x Z/nr; element names are the digit strings."""
    moduli = list(moduli)
    elems = list(itertools.product(*[range(m) for m in moduli]))
    index = {e: i for i, e in enumerate(elems)}
    table = [[index[tuple((a + b) % m for a, b, m in zip(x, y, moduli))] for y in elems]
             for x in elems]
    sep = "" if max(moduli) <= 10 else "."
    names = [sep.join(str(a) for a in e) for e in elems]
    gens = [index[tuple(1 if j == i else 0 for j in range(len(moduli)))] for i in range(len(moduli))]
    label = "x".join(f"Z/{m}" for m in moduli)
    return finite_group(table, names=names, generators=gens, label=label, identity=0)


def _cycle_name(perm: Sequence[int]) -> str:
    seen, parts = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(x + 1)
            x = perm[x]
        parts.append("(" + "".join(str(c) for c in cyc) + ")")
    return "".join(parts) or "e"


def symmetric(n: int) -> GroupSpec:
    """S_n on {1..n}; products compose right to left: (st)(x) = s(t(x))."""
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(s[t[x]] for x in range(n))] for t in perms] for s in perms]
    names = [_cycle_name(p) for p in perms]
    gens = []
    if n >= 2:
        transposition = list(range(n))
        transposition[0], transposition[1] = 1, 0
        gens.append(index[tuple(transposition)])
        gens.append(index[tuple((x + 1) % n for x in range(n))])
    return finite_group(table, names=names, generators=gens, label=f"S{n}", identity=0)


def dihedral(n: int) -> GroupSpec:
    """Dihedral group of order 2n, elements r^i s^a with s r s = r^-1."""
    elems = [(i, a) for a in range(2) for i in range(n)]
    index = {e: k for k, e in enumerate(elems)}

    def mul(x, y):
        i, a = x
        j, b = y
        return ((i + (-j if a else j)) % n, (a + b) % 2)

    table = [[index[mul(x, y)] for y in elems] for x in elems]

    def name(e):
        i, a = e
        r = "" if i == 0 else ("r" if i == 1 else f"r{i}")
        s = "s" if a else ""
        return (r + s) or "e"

    names = [name(e) for e in elems]
    gens = [index[(1 % n, 0)], index[(0, 1)]]
    return finite_group(table, names=names, generators=gens, label=f"D{n}", identity=0)


_CYCLIC_RE = re.compile(r"Z/(\d+)$")
_POWER_RE = re.compile(r"\(Z/(\d+)\)\^(\d+)$")
_FREE_RE = re.compile(r"Z\^(\d+)$")


def get_group(ident: str) -> GroupSpec:
    """Resolve a built-in id (``"Z/6"``, ``"S3"``, ``"D4"``, ``"Z^2"``, ``"(Z/2)^3"``,
    ``"Z/2xZ/4"``) or ``@path.json`` / ``path.json`` for a table file."""
    s = ident.strip()
    if s.startswith("@") or s.endswith(".json"):
        return load_group_file(s.lstrip("@"))
    if m := _FREE_RE.match(s):
        return free_abelian(int(m.group(1)))
    if m := _CYCLIC_RE.match(s):
        return cyclic(int(m.group(1)))
    if m := _POWER_RE.match(s):
        return cyclic_product([int(m.group(1))] * int(m.group(2)))
    if "x" in s and all(_CYCLIC_RE.match(p) for p in s.split("x")):
        return cyclic_product([int(_CYCLIC_RE.match(p).group(1)) for p in s.split("x")])
    if m := re.fullmatch(r"S(\d+)", s):
        return symmetric(int(m.group(1)))
    if m := re.fullmatch(r"D(\d+)", s):
        return dihedral(int(m.group(1)))
    if s in ("trivial", "1"):
        return cyclic(1)
    raise GroupError(f"unknown group id {ident!r}")


def load_group_file(path: str) -> GroupSpec:
    with open(path) as fh:
        data = json.load(fh)
    return group_from_json(data)


def group_from_json(data: dict) -> GroupSpec:
    n = int(data["order"])
    flat = data["table"]
    if flat and not isinstance(flat[0], list):
        table = [flat[i * n:(i + 1) * n] for i in range(n)]
    else:
        table = flat
    names = data.get("names")
    gens = data.get("generators")
    if gens and names and isinstance(gens[0], str):
        gens = [names.index(g) for g in gens]
    return finite_group(table, names=names, generators=gens, label=data.get("label", ""))


# -- enumeration ---------------------------------------------------------


def enumerate_ball(spec: GroupSpec, radius: int) -> list:
    """All elements with max-norm <= radius in lexicographic order (Z^d), or every
    element of a finite group."""
    if spec.is_finite:
        return spec.elements()
    if radius < 0:
        return []
    rng = range(-radius, radius + 1)
    return [tuple(p) for p in itertools.product(rng, repeat=spec.d)]


def enumerate_sphere(spec: GroupSpec, radius: int) -> list:
    """Elements of max-norm exactly ``radius`` (Z^d only), lexicographic."""
    if radius == 0:
        return [spec.identity]
    return [g for g in enumerate_ball(spec, radius) if spec.radius(g) == radius]


@dataclass(frozen=True)
class SubgroupSet:
    """A verified subgroup of a finite group, stored as a sorted index tuple."""

    spec: GroupSpec = field(repr=False)
    elements: tuple

    def __post_init__(self):
        spec = self.spec
        if not spec.is_finite:
            raise GroupError("SubgroupSet requires a finite group")
        els = tuple(sorted(set(int(x) for x in self.elements)))
        object.__setattr__(self, "elements", els)
        s = set(els)
        if spec.identity_index not in s:
            raise GroupError("subgroup must contain the identity")
        t, inv = spec.table, spec.inverse
        for a in els:
            if inv[a] not in s:
                raise GroupError(f"not closed under inverse at {a}")
            row = t[a]
            for b in els:
                if row[b] not in s:
                    raise GroupError(f"not closed under product at ({a}, {b})")

    def __contains__(self, g) -> bool:
        return g in self.as_set

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @cached_property
    def as_set(self) -> frozenset:
        return frozenset(self.elements)

    @cached_property
    def mask(self) -> int:
        m = 0
        for a in self.elements:
            m |= 1 << a
        return m

    def issubset(self, other: "SubgroupSet") -> bool:
        return self.as_set <= other.as_set

    def names(self) -> list:
        return [self.spec.name_of(g) for g in self.elements]

    def __eq__(self, other):
        if not isinstance(other, SubgroupSet):
            return NotImplemented
        return self.elements == other.elements and self.spec == other.spec

    def __hash__(self):
        return hash(self.elements)


def _closure(spec: GroupSpec, gens: Iterable[int]) -> list:
    t = spec.table
    gens = list(dict.fromkeys(int(g) for g in gens))
    seen = {spec.identity_index}
    frontier = [spec.identity_index]
    while frontier:
        nxt = []
        for x in frontier:
            row = t[x]
            for s in gens:
                y = row[s]
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(seen)


def subgroup_generate(spec: GroupSpec, S: Iterable) -> SubgroupSet:
    """Smallest subgroup containing S (breadth-first closure on the Cayley graph;
    in a finite group the generated monoid is already a group)."""
    if not spec.is_finite:
        raise GroupError("subgroup_generate requires a finite group")
    gens = [spec.normalize(g) for g in S]
    return SubgroupSet(spec, tuple(_closure(spec, gens)))


def enumerate_subgroups(spec: GroupSpec, cap: int = DEFAULT_SUBGROUP_CAP) -> list:
    """All subgroups, found by adjoining one element at a time to already-found
    subgroups, starting from the trivial one. Sorted by (size, elements)."""
    if not spec.is_finite:
        raise GroupError("enumerate_subgroups requires a finite group")
    if spec.order > cap:
        raise GroupError(f"group order {spec.order} exceeds enumeration cap {cap}")
    t = spec.table
    trivial = (spec.identity_index,)
    found = {trivial: []}
    queue = [trivial]
    while queue:
        H = queue.pop()
        gens = found[H]
        covered = set(H)
        for g in range(spec.order):
            if g in covered:
                continue
            # <H, g> = <H, hg> for h in H, so one representative per coset Hg suffices
            covered.update(t[h][g] for h in H)
            K = tuple(_closure(spec, gens + [g]))
            if K not in found:
                found[K] = gens + [g]
                queue.append(K)
    subs = [SubgroupSet(spec, K) for K in found]
    subs.sort(key=lambda s: (len(s), s.elements))
    return subs


def join(spec: GroupSpec, *subgroups: SubgroupSet) -> SubgroupSet:
    els = set()
    for Y in subgroups:
        els.update(Y.elements)
    return subgroup_generate(spec, els)


def validate_automorphism(spec: GroupSpec, perm: Sequence[int]) -> tuple:
    """Check that a permutation of element indices is a group automorphism."""
    perm = tuple(int(p) for p in perm)
    n = spec.order
    if sorted(perm) != list(range(n)):
        raise GroupError("automorphism must be a permutation of element indices")
    t = spec.table_array
    p = np.asarray(perm)
    if not np.array_equal(p[t], t[p[:, None], p[None, :]]):
        raise GroupError("permutation is not a homomorphism")
    return perm
