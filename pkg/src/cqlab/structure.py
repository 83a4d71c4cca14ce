"""Finite relational structures with a tuple of distinguished elements.

Everything in the package passes :class:`PointedStructure` values around.
They are immutable; all "modifying" helpers return new structures.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")
ELEMENT = re.compile(r"^[^\s,()#:]+$")
FACT_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)\s*\((.*)\)$")


class StructureError(ValueError):
    """Invalid structure, schema mismatch or precondition violation."""


class StructureParseError(StructureError):
    """Parse failure carrying a diagnostic kind and a 1-based line number."""

    def __init__(self, kind: str, line: int, message: str):
        super().__init__(f"line {line}: {kind}: {message}")
        self.kind = kind
        self.line = line
        self.message = message


@dataclass(frozen=True)
class Schema:
    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        rels = tuple(sorted((str(n), int(a)) for n, a in self.relations))
        names = [n for n, _ in rels]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation names in schema: {names}")
        for name, arity in rels:
            if not IDENT.match(name):
                raise StructureError(f"bad relation name {name!r}")
            if arity < 1:
                raise StructureError(f"relation {name} must have arity >= 1")
        object.__setattr__(self, "relations", rels)

    @classmethod
    def of(cls, *specs: str | tuple[str, int]) -> "Schema":
        """``Schema.of("R/2", "P/1")`` or ``Schema.of(("R", 2))``."""
        rels = []
        for s in specs:
            if isinstance(s, str):
                name, _, ar = s.partition("/")
                rels.append((name.strip(), int(ar)))
            else:
                rels.append(tuple(s))
        return cls(tuple(rels))

    @classmethod
    def parse(cls, text: str) -> "Schema":
        parts = [p.strip() for p in text.split(",") if p.strip()]
        rels = []
        for p in parts:
            m = re.match(r"^([A-Za-z_][A-Za-z0-9_']*)\s*/\s*(\d+)$", p)
            if not m:
                raise StructureError(f"bad schema entry {p!r}")
            rels.append((m.group(1), int(m.group(2))))
        return cls(tuple(rels))

    @cached_property
    def arities(self) -> dict[str, int]:
        return dict(self.relations)

    def arity(self, name: str) -> int:
        return self.arities[name]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.relations]

    @property
    def is_binary(self) -> bool:
        return all(a <= 2 for _, a in self.relations)

    def __str__(self) -> str:
        return ", ".join(f"{n}/{a}" for n, a in self.relations)


class Fact(NamedTuple):
    relation: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.relation}({','.join(self.args)})"


def fact(relation: str, *args: str) -> Fact:
    return Fact(relation, tuple(args))


@dataclass(frozen=True, eq=False)
class PointedStructure:
    schema: Schema
    domain: frozenset
    facts: frozenset
    dist: tuple = ()
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dom = frozenset(self.domain)
        facts = frozenset(Fact(f[0], tuple(f[1])) for f in self.facts)
        dist = tuple(self.dist)
        arities = self.schema.arities
        for f in facts:
            ar = arities.get(f.relation)
            if ar is None:
                raise StructureError(f"undeclared relation in fact {f}")
            if ar != len(f.args):
                raise StructureError(f"arity mismatch in fact {f}")
            for x in f.args:
                if x not in dom:
                    raise StructureError(f"fact {f} uses element {x!r} outside the domain")
        for x in dist:
            if x not in dom:
                raise StructureError(f"distinguished element {x!r} outside the domain")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "facts", facts)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "_key", (self.schema, dom, facts, dist))

    def __eq__(self, other):
        return isinstance(other, PointedStructure) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        fs = ", ".join(str(f) for f in self.sorted_facts)
        extra = sorted(self.domain - self.active_elements)
        iso = f" +{{{', '.join(extra)}}}" if extra else ""
        return f"PointedStructure({{{fs}}}{iso}, ({', '.join(self.dist)}))"

    @classmethod
    def build(
        cls,
        schema: Schema,
        facts: Iterable,
        dist: Sequence[str] = (),
        domain: Iterable[str] | None = None,
    ) -> "PointedStructure":
        """Domain defaults to the elements used by facts and ``dist``."""
        facts = [Fact(f[0], tuple(f[1])) for f in facts]
        dom = set(dist)
        for f in facts:
            dom.update(f.args)
        if domain is not None:
            dom.update(domain)
        return cls(schema, frozenset(dom), frozenset(facts), tuple(dist))

    @property
    def k(self) -> int:
        return len(self.dist)

    @property
    def size(self) -> int:
        return len(self.facts)

    @cached_property
    def sorted_facts(self) -> list[Fact]:
        return sorted(self.facts)

    @cached_property
    def sorted_domain(self) -> list[str]:
        return sorted(self.domain)

    @cached_property
    def active_elements(self) -> frozenset:
        return frozenset(x for f in self.facts for x in f.args)

    @cached_property
    def dist_set(self) -> frozenset:
        return frozenset(self.dist)

    @cached_property
    def facts_of(self) -> dict[str, list[Fact]]:
        out: dict[str, list[Fact]] = {x: [] for x in self.domain}
        for f in self.sorted_facts:
            for x in dict.fromkeys(f.args):
                out[x].append(f)
        return out

    def degree(self, x: str) -> int:
        return sum(f.args.count(x) for f in self.facts_of[x])

    def with_dist(self, dist: Sequence[str]) -> "PointedStructure":
        return PointedStructure(self.schema, self.domain | set(dist), self.facts, tuple(dist))

    def with_facts(self, facts: Iterable) -> "PointedStructure":
        return PointedStructure.build(self.schema, facts, self.dist, self.domain)

    def restrict(self, elements: Iterable[str]) -> "PointedStructure":
        """Induced substructure; distinguished elements are always kept."""
        keep = set(elements) | self.dist_set
        facts = [f for f in self.facts if all(x in keep for x in f.args)]
        return PointedStructure(self.schema, frozenset(keep), frozenset(facts), self.dist)

    def trim(self) -> "PointedStructure":
        """Drop elements that occur neither in a fact nor in ``dist``."""
        keep = self.active_elements | self.dist_set
        if keep == self.domain:
            return self
        return PointedStructure(self.schema, keep, self.facts, self.dist)

    def rename(self, mapping: Mapping[str, str]) -> "PointedStructure":
        """Apply an element map; non-injective maps take the image structure."""
        m = lambda x: mapping.get(x, x)
        facts = frozenset(Fact(f.relation, tuple(m(x) for x in f.args)) for f in self.facts)
        return PointedStructure(
            self.schema, frozenset(m(x) for x in self.domain), facts, tuple(m(x) for x in self.dist)
        )

    def compact_names(self, prefix: str = "") -> "PointedStructure":
        """Rename elements to short deterministic names (order of first use)."""
        order = list(dict.fromkeys(itertools.chain(
            self.dist, (x for f in self.sorted_facts for x in f.args), self.sorted_domain)))
        return self.rename({x: short_name(i, prefix) for i, x in enumerate(order)})

    def __str__(self) -> str:
        return encode_structure(self)


def short_name(i: int, prefix: str = "") -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    if prefix:
        return f"{prefix}{i}"
    return letters[i] if i < 26 else f"e{i}"


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def all_facts(schema: Schema, elements: Sequence[str]) -> list[Fact]:
    elements = sorted(elements)
    return [
        Fact(name, args)
        for name, ar in schema.relations
        for args in itertools.product(elements, repeat=ar)
    ]


def complete_structure(schema: Schema, elements: Sequence[str], dist: Sequence[str] = ()) -> PointedStructure:
    """Every possible fact over ``elements``."""
    return PointedStructure.build(schema, all_facts(schema, elements), dist, elements)


def one_point_full(schema: Schema, k: int, name: str = "a") -> PointedStructure:
    return complete_structure(schema, [name], (name,) * k)


# codec


def decode_structure(text: str, schema: Schema | None = None) -> PointedStructure:
    """Parse the line-oriented structure format."""
    header: dict[str, tuple[int, str]] = {}
    fact_lines: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^(schema|elements|distinguished)\s*:(.*)$", line)
        if m:
            key = m.group(1)
            if key in header:
                raise StructureParseError("syntax", lineno, f"repeated '{key}:' line")
            header[key] = (lineno, m.group(2).strip())
        else:
            fact_lines.append((lineno, line))

    if "schema" in header:
        lineno, body = header["schema"]
        try:
            schema = Schema.parse(body)
        except StructureError as exc:
            raise StructureParseError("syntax", lineno, str(exc)) from None
    elif schema is None:
        raise StructureParseError("syntax", 1, "missing 'schema:' line")

    def element_list(key: str) -> list[str] | None:
        if key not in header:
            return None
        lineno, body = header[key]
        items = [s.strip() for s in body.split(",")] if body else []
        for s in items:
            if not ELEMENT.match(s):
                raise StructureParseError("syntax", lineno, f"bad element name {s!r}")
        return items

    elements = element_list("elements")
    dist = element_list("distinguished") or []
    domain = set(elements) if elements is not None else None

    facts = []
    for lineno, line in fact_lines:
        m = FACT_LINE.match(line)
        if not m:
            raise StructureParseError("syntax", lineno, f"cannot parse fact {line!r}")
        rel = m.group(1)
        args = [s.strip() for s in m.group(2).split(",")]
        if any(not ELEMENT.match(s) for s in args):
            raise StructureParseError("syntax", lineno, f"bad argument list in {line!r}")
        if rel not in schema.arities:
            raise StructureParseError("undeclared-relation", lineno, f"relation {rel} not in schema")
        if schema.arity(rel) != len(args):
            raise StructureParseError(
                "arity-mismatch", lineno,
                f"{rel} has arity {schema.arity(rel)} but got {len(args)} arguments")
        if domain is not None:
            for x in args:
                if x not in domain:
                    raise StructureParseError("unknown-element", lineno, f"element {x!r} not declared")
        facts.append(Fact(rel, tuple(args)))

    if domain is not None:
        lineno = header["distinguished"][0] if "distinguished" in header else 1
        for x in dist:
            if x not in domain:
                raise StructureParseError("unknown-element", lineno, f"distinguished element {x!r} not declared")
    return PointedStructure.build(schema, facts, dist, domain)


def encode_structure(A: PointedStructure) -> str:
    lines = [f"schema: {A.schema}", f"elements: {', '.join(A.sorted_domain)}"]
    if A.k:
        lines.append(f"distinguished: {', '.join(A.dist)}")
    lines.extend(str(f) for f in A.sorted_facts)
    return "\n".join(lines) + "\n"


# classification


@dataclass(frozen=True)
class StructureFlags:
    c_acyclic: bool
    c_connected: bool
    acyclic: bool
    safe: bool
    unp: bool


class _DSU:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        while p != x:
            gp = self.parent.setdefault(p, p)
            self.parent[x] = gp
            x, p = p, gp
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _incidence_acyclic(A: PointedStructure, removed: frozenset) -> bool:
    dsu = _DSU()
    for i, f in enumerate(A.sorted_facts):
        for x in f.args:
            if x in removed:
                continue
            if not dsu.union(("f", i), ("e", x)):
                return False
    return True


def is_c_acyclic(A: PointedStructure) -> bool:
    return _incidence_acyclic(A, A.dist_set)


def is_acyclic(A: PointedStructure) -> bool:
    return _incidence_acyclic(A, frozenset())


def incidence_components(A: PointedStructure) -> list[frozenset]:
    """Element sets of the connected components of the incidence graph."""
    dsu = _DSU()
    for x in A.domain:
        dsu.find(x)
    for f in A.facts:
        for x in f.args[1:]:
            dsu.union(f.args[0], x)
    groups: dict = {}
    for x in A.sorted_domain:
        groups.setdefault(dsu.find(x), set()).add(x)
    return [frozenset(g) for g in groups.values()]


def is_c_connected(A: PointedStructure) -> bool:
    return all(comp & A.dist_set for comp in incidence_components(A))


def is_safe(A: PointedStructure) -> bool:
    return A.dist_set <= A.active_elements


def is_unp(A: PointedStructure) -> bool:
    return len(A.dist_set) == len(A.dist)


def classify(A: PointedStructure) -> StructureFlags:
    return StructureFlags(
        c_acyclic=is_c_acyclic(A),
        c_connected=is_c_connected(A),
        acyclic=is_acyclic(A),
        safe=is_safe(A),
        unp=is_unp(A),
    )


def fg_components(A: PointedStructure) -> list[PointedStructure]:
    """Split the facts by connectivity through non-distinguished elements."""
    dsu = _DSU()
    facts = A.sorted_facts
    owner: dict[str, int] = {}
    for i, f in enumerate(facts):
        dsu.find(i)
        for x in f.args:
            if x in A.dist_set:
                continue
            if x in owner:
                dsu.union(owner[x], i)
            else:
                owner[x] = i
    groups: dict[int, list[Fact]] = {}
    for i, f in enumerate(facts):
        groups.setdefault(dsu.find(i), []).append(f)
    return [PointedStructure.build(A.schema, fs, A.dist) for fs in groups.values()]


def reach(A: PointedStructure) -> PointedStructure:
    """Substructure induced by everything connected to a distinguished element."""
    if A.k == 0:
        raise StructureError("reach needs at least one distinguished element")
    keep = set()
    for comp in incidence_components(A):
        if comp & A.dist_set:
            keep |= comp
    return A.restrict(keep)


def identity_partition(dist: Sequence[str]) -> tuple[tuple[int, ...], ...]:
    """Positions of ``dist`` grouped by equal entries, in first-occurrence order."""
    blocks: dict[str, list[int]] = {}
    for i, x in enumerate(dist):
        blocks.setdefault(x, []).append(i)
    return tuple(tuple(b) for b in blocks.values())


def same_identity_type(s: Sequence[str], t: Sequence[str]) -> bool:
    return len(s) == len(t) and identity_partition(s) == identity_partition(t)


# canonical forms


def _refine_colors(elems: list, facts: list, dist: tuple) -> list[int]:
    """Stable colouring by iterated neighbourhood signatures; ``facts`` use element indices."""
    occ: list[list[tuple[int, tuple[int, ...]]]] = [[] for _ in elems]
    for fi, (_, args) in enumerate(facts):
        for x in set(args):
            occ[x].append((fi, tuple(j for j, y in enumerate(args) if y == x)))
    first = [tuple(i for i, y in enumerate(dist) if y == x) for x in range(len(elems))]
    palette = {c: i for i, c in enumerate(sorted(set(first)))}
    color = [palette[c] for c in first]
    n_colors = len(palette)
    while True:
        fcol = [(rel, tuple(color[y] for y in args)) for rel, args in facts]
        sig = [(color[x], tuple(sorted((fcol[fi], pos) for fi, pos in occ[x]))) for x in range(len(elems))]
        palette = {c: i for i, c in enumerate(sorted(set(sig)))}
        if len(palette) == n_colors:
            return color
        color = [palette[c] for c in sig]
        n_colors = len(palette)


def raw_canonical_key(schema_text: str, domain, facts, dist, limit: int = 200_000) -> tuple:
    """Canonical key from plain data: ``facts`` as ``(relation, args)`` pairs."""
    elems = sorted(domain)
    idx = {x: i for i, x in enumerate(elems)}
    ifacts = sorted((rel, tuple(idx[y] for y in args)) for rel, args in facts)
    idist = tuple(idx[x] for x in dist)
    color = _refine_colors(elems, ifacts, idist)
    cells: dict[int, list[int]] = {}
    for i, c in enumerate(color):
        cells.setdefault(c, []).append(i)
    ordered_cells = [cells[c] for c in sorted(cells)]
    count = 1
    for cell in ordered_cells:
        for i in range(2, len(cell) + 1):
            count *= i
    if count > limit:
        raise StructureError("structure too symmetric for exact canonical form")
    best = None
    for perm in itertools.product(*(itertools.permutations(c) for c in ordered_cells)):
        index = [0] * len(elems)
        for i, x in enumerate(itertools.chain.from_iterable(perm)):
            index[x] = i
        key = (
            tuple(index[x] for x in idist),
            tuple(sorted((rel, tuple(index[x] for x in args)) for rel, args in ifacts)),
        )
        if best is None or key < best:
            best = key
    return (schema_text, len(elems), best)


def canonical_key(A: PointedStructure, limit: int = 200_000) -> tuple:
    """Isomorphism-invariant key; exact, intended for small structures."""
    return raw_canonical_key(str(A.schema), A.domain, A.facts, A.dist, limit)


def isomorphic(A: PointedStructure, B: PointedStructure) -> bool:
    if len(A.domain) != len(B.domain) or len(A.facts) != len(B.facts) or A.k != B.k:
        return False
    return canonical_key(A) == canonical_key(B)


def from_canonical_key(schema: Schema, key: tuple) -> PointedStructure:
    _, n, (dist, facts) = key
    names = [short_name(i) for i in range(n)]
    return PointedStructure.build(
        schema, [Fact(r, tuple(names[i] for i in args)) for r, args in facts],
        [names[i] for i in dist], names)
