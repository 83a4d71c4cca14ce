"""Constructions on pointed structures: products, unions, powers, encodings."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .structure import (
    Fact,
    PointedStructure,
    Schema,
    StructureError,
    all_facts,
    fresh_name,
    identity_partition,
    same_identity_type,
)


class SizeCapExceeded(StructureError):
    """A construction would exceed its configured element cap."""


def _same_schema_and_k(A: PointedStructure, B: PointedStructure) -> None:
    if A.schema != B.schema:
        raise StructureError(f"schema mismatch: {A.schema} vs {B.schema}")
    if A.k != B.k:
        raise StructureError(f"distinguished tuple length mismatch: {A.k} vs {B.k}")


def pair_name(a: str, b: str) -> str:
    return f"[{a}|{b}]"


def direct_product(A: PointedStructure, B: PointedStructure) -> PointedStructure:
    _same_schema_and_k(A, B)
    by_rel: dict[str, list[Fact]] = {}
    for g in B.sorted_facts:
        by_rel.setdefault(g.relation, []).append(g)
    facts = []
    for f in A.sorted_facts:
        for g in by_rel.get(f.relation, ()):
            facts.append(Fact(f.relation, tuple(pair_name(x, y) for x, y in zip(f.args, g.args))))
    domain = [pair_name(x, y) for x in A.sorted_domain for y in B.sorted_domain]
    dist = tuple(pair_name(x, y) for x, y in zip(A.dist, B.dist))
    return PointedStructure(A.schema, frozenset(domain), frozenset(facts), dist)


def product(*structures: PointedStructure) -> PointedStructure:
    return reduce(direct_product, structures)


def fg_disjoint_union(*structures: PointedStructure) -> PointedStructure:
    """Glue structures along their distinguished tuples, everything else apart.

    The first structure keeps its names. Later structures have their
    distinguished entries mapped onto the first one's and clashing
    non-distinguished names primed until fresh.
    """
    if not structures:
        raise StructureError("fg_disjoint_union needs at least one structure")
    first = structures[0]
    facts = set(first.facts)
    domain = set(first.domain)
    for B in structures[1:]:
        _same_schema_and_k(first, B)
        if not same_identity_type(first.dist, B.dist):
            raise StructureError(
                f"identity types differ: {first.dist} vs {B.dist}")
        mapping = dict(zip(B.dist, first.dist))
        for x in B.sorted_domain:
            if x in mapping:
                continue
            name = x
            while name in domain or name in mapping.values():
                name += "'"
            mapping[x] = name
            domain.add(name)
        domain.update(mapping.values())
        facts.update(Fact(f.relation, tuple(mapping[x] for x in f.args)) for f in B.facts)
    return PointedStructure(first.schema, frozenset(domain), frozenset(facts), first.dist)


# exponentiation


def function_name(values) -> str:
    return "{" + ";".join(values) + "}"


def exponentiate(B: PointedStructure, C: PointedStructure, *, cap: int = 10**6) -> PointedStructure:
    """The power structure ``B^C`` (distinguished tuples are ignored).

    Elements are the functions dom(C) -> dom(B), named by listing their
    values along sorted dom(C).
    """
    D, _ = exponentiate_with_functions(B, C, cap=cap)
    return D


@dataclass
class PowerTables:
    """Dense description of a power structure ``B^C``.

    Row ``i`` of ``values`` lists function ``i``'s values (as indices into
    ``bdom``) along ``cdom``. ``tables`` holds a boolean array per relation
    whose entries say which tuples of functions form a fact; relations too
    wide for a dense table are listed in ``sparse`` as ready-made facts.
    """

    bdom: list[str]
    cdom: list[str]
    values: np.ndarray
    names: list[str]
    tables: dict[str, np.ndarray]
    sparse: dict[str, list[Fact]]

    def functions(self) -> dict[str, dict[str, str]]:
        bdom, cdom = self.bdom, self.cdom
        return {
            self.names[i]: {cdom[j]: bdom[v] for j, v in enumerate(row)}
            for i, row in enumerate(self.values)
        }

    def facts(self, keep: np.ndarray | None = None) -> list[Fact]:
        """Facts of the power, optionally of its induced substructure on ``keep``."""
        names = self.names
        out: list[Fact] = []
        for rel, ok in self.tables.items():
            if keep is not None:
                ok = ok[np.ix_(*([keep] * ok.ndim))]
                pick = keep
            else:
                pick = np.arange(len(names))
            for tup in zip(*np.nonzero(ok)):
                out.append(Fact(rel, tuple(names[pick[i]] for i in tup)))
        allowed = None if keep is None else {names[i] for i in keep}
        for facts in self.sparse.values():
            out.extend(f for f in facts if allowed is None or all(x in allowed for x in f.args))
        return out


def power_tables(B: PointedStructure, C: PointedStructure, *, cap: int = 10**6) -> PowerTables:
    if B.schema != C.schema:
        raise StructureError(f"schema mismatch: {B.schema} vs {C.schema}")
    bdom, cdom = B.sorted_domain, C.sorted_domain
    n_funcs = len(bdom) ** len(cdom)
    if n_funcs > cap:
        raise SizeCapExceeded(
            f"|dom(B)|^|dom(C)| = {len(bdom)}^{len(cdom)} exceeds the cap of {cap}")
    bidx = {x: i for i, x in enumerate(bdom)}
    cidx = {x: i for i, x in enumerate(cdom)}
    F = np.array(list(itertools.product(range(len(bdom)), repeat=len(cdom))), dtype=np.int64)
    F = F.reshape(n_funcs, len(cdom))
    names = [function_name([bdom[v] for v in row]) for row in F]
    tables: dict[str, np.ndarray] = {}
    sparse: dict[str, list[Fact]] = {}
    for rel, ar in B.schema.relations:
        cfacts = [tuple(cidx[x] for x in f.args) for f in C.sorted_facts if f.relation == rel]
        bset = np.zeros((len(bdom),) * ar, dtype=bool)
        for f in B.facts:
            if f.relation == rel:
                bset[tuple(bidx[x] for x in f.args)] = True
        if n_funcs ** ar > cap * 64:
            sparse[rel] = _power_facts_sparse(rel, ar, cfacts, bset, F, names, cap)
            continue
        ok = np.ones((n_funcs,) * ar, dtype=bool)
        for cf in cfacts:
            # broadcast F[:, cf[p]] along axis p
            idx = tuple(
                F[:, cf[p]].reshape([-1 if q == p else 1 for q in range(ar)])
                for p in range(ar)
            )
            ok &= bset[idx]
        tables[rel] = ok
    return PowerTables(bdom, cdom, F, names, tables, sparse)


def exponentiate_with_functions(
    B: PointedStructure, C: PointedStructure, *, cap: int = 10**6
) -> tuple[PointedStructure, dict[str, dict[str, str]]]:
    T = power_tables(B, C, cap=cap)
    D = PointedStructure(B.schema, frozenset(T.names), frozenset(T.facts()), ())
    return D, T.functions()


def _power_facts_sparse(rel, ar, cfacts, bset, F, names, cap):
    """Backtracking variant for wide relations where a dense table is too big."""
    n = F.shape[0]
    out = []
    limit = cap * 64

    def extend(prefix):
        p = len(prefix)
        if p == ar:
            out.append(Fact(rel, tuple(names[i] for i in prefix)))
            if len(out) > limit:
                raise SizeCapExceeded(f"power structure has more than {limit} {rel}-facts")
            return
        for i in range(n):
            cand = prefix + [i]
            good = True
            for cf in cfacts:
                vals = tuple(F[cand[q], cf[q]] for q in range(p + 1))
                sub = bset[vals]
                if not np.any(sub):
                    good = False
                    break
            if good:
                extend(cand)

    extend([])
    return out


# binary encoding


def binary_schema(schema: Schema) -> Schema:
    return Schema(tuple((f"{name}_{i}", 2) for name, ar in schema.relations for i in range(1, ar + 1)))


def fact_element_name(f: Fact) -> str:
    return f"{f.relation}<{';'.join(f.args)}>"


def binary_encode(A: PointedStructure) -> PointedStructure:
    """One fresh element per fact, linked to its arguments by position."""
    schema = binary_schema(A.schema)
    facts = []
    domain = set(A.domain)
    for f in A.sorted_facts:
        w = fresh_name(fact_element_name(f), domain)
        domain.add(w)
        for i, x in enumerate(f.args, 1):
            facts.append(Fact(f"{f.relation}_{i}", (x, w)))
    return PointedStructure(schema, frozenset(domain), frozenset(facts), A.dist)


def binary_decode(B: PointedStructure, schema: Schema) -> PointedStructure:
    """Read back facts ``R(a1..an)`` witnessed by a common second argument."""
    if B.schema != binary_schema(schema):
        raise StructureError("structure is not over the binary encoding of the given schema")
    incoming: dict[tuple[str, str], list[set]] = {}
    for g in B.facts:
        rel, _, pos = g.relation.rpartition("_")
        a, y = g.args
        slots = incoming.setdefault((rel, y), [set() for _ in range(schema.arity(rel))])
        slots[int(pos) - 1].add(a)
    facts = set()
    for (rel, _y), slots in incoming.items():
        if all(slots):
            for args in itertools.product(*(sorted(s) for s in slots)):
                facts.add(Fact(rel, args))
    return PointedStructure(schema, B.domain, frozenset(facts), B.dist)


# unsafe structures


def unsafe_dual_family(schema: Schema, k: int) -> list[PointedStructure]:
    """Two-element structures catching every structure with a fact-free dist entry."""
    if k < 1:
        raise StructureError("unsafe_dual_family needs k >= 1")
    full_c = all_facts(schema, ["c"])
    out = []
    for r in range(1, k + 1):
        for S in itertools.combinations(range(k), r):
            dist = tuple("b" if i in S else "c" for i in range(k))
            out.append(PointedStructure.build(schema, full_c, dist, ["b", "c"]))
    return out


def partitions(items: list) -> list[list[list]]:
    """All set partitions of ``items`` in a fixed order."""
    if not items:
        return [[]]
    head, rest = items[0], items[1:]
    out = []
    for p in partitions(rest):
        out.append([[head]] + [list(b) for b in p])
        for i in range(len(p)):
            q = [list(b) for b in p]
            q[i] = [head] + q[i]
            out.append(q)
    return out


def refines_strictly(finer, coarser) -> bool:
    """Whether partition ``finer`` strictly refines ``coarser`` (blocks of positions)."""
    block_of = {i: j for j, b in enumerate(coarser) for i in b}
    if not all(len({block_of[i] for i in b}) == 1 for b in finer):
        return False
    return len(finer) > len(coarser)


def dist_from_partition(partition, k: int, prefix: str = "d") -> tuple[str, ...]:
    dist = [""] * k
    for j, block in enumerate(sorted(partition, key=min)):
        for i in block:
            dist[i] = f"{prefix}{j}"
    return tuple(dist)


def dist_partition(dist) -> list[list[int]]:
    return [list(b) for b in identity_partition(dist)]
