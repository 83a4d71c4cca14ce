"""Seeded random structures and queries for experiments and property tests."""

from __future__ import annotations

import random

from .cq import ConjunctiveQuery, canonical_query
from .structure import Fact, PointedStructure, Schema, is_c_acyclic, is_safe


def random_structure(schema: Schema, n: int, k: int, rng: random.Random, density: float = 0.3) -> PointedStructure:
    elems = [f"e{i}" for i in range(n)]
    facts = []
    for rel, ar in schema.relations:
        for _ in range(max(1, round(density * n ** ar))):
            if rng.random() < density:
                facts.append(Fact(rel, tuple(rng.choice(elems) for _ in range(ar))))
    dist = tuple(rng.choice(elems) for _ in range(k))
    return PointedStructure.build(schema, facts, dist, elems)


def _dist_tuple(k: int, rng: random.Random, repeat: float) -> tuple[str, ...]:
    names: list[str] = []
    out = []
    for _ in range(k):
        if names and rng.random() < repeat:
            out.append(rng.choice(names))
        else:
            names.append(f"x{len(names) + 1}")
            out.append(names[-1])
    return tuple(out)


def _random_body(
    schema: Schema, k: int, n_atoms: int, rng: random.Random, *, acyclic: bool, repeat: float, fresh: float
) -> PointedStructure | None:
    dist = _dist_tuple(k, rng, repeat)
    elems = list(dict.fromkeys(dist))
    facts: set[Fact] = set()
    # make every head variable occur in an atom first
    pending = list(elems)
    attempts = 0
    while len(facts) < n_atoms and attempts < 50 * n_atoms:
        attempts += 1
        rel, ar = rng.choice(schema.relations)
        args = []
        n_new = 0
        # one position reuses an existing element most of the time, so queries stay mostly connected
        anchor = rng.randrange(ar) if elems and rng.random() < 0.85 else -1
        for p in range(ar):
            if p == 0 and pending:
                args.append(pending[0])
            elif p == anchor:
                args.append(rng.choice(elems))
            elif not elems or rng.random() < fresh:
                args.append(f"y{len(elems) + n_new + 1}")
                n_new += 1
            else:
                args.append(rng.choice(elems))
        f = Fact(rel, tuple(args))
        if f in facts:
            continue
        trial = facts | {f}
        new_elems = elems + [x for x in dict.fromkeys(args) if x not in elems]
        if acyclic and not is_c_acyclic(PointedStructure.build(schema, trial, dist, new_elems)):
            continue
        facts = trial
        elems = new_elems
        if pending and pending[0] in args:
            pending = [x for x in pending if all(x not in g.args for g in facts)]
    A = PointedStructure.build(schema, facts, dist, elems)
    return A if facts and is_safe(A) else None


def random_c_acyclic_query(
    schema: Schema, k: int, max_atoms: int, rng: random.Random, *, min_atoms: int = 1
) -> ConjunctiveQuery:
    """A safe c-acyclic query; repeated head variables appear now and then."""
    while True:
        A = _random_body(schema, k, rng.randint(min_atoms, max_atoms), rng,
                         acyclic=True, repeat=0.15, fresh=0.55)
        if A is not None:
            return canonical_query(A)


def random_query(schema: Schema, k: int, max_atoms: int, rng: random.Random, *, min_atoms: int = 1) -> ConjunctiveQuery:
    """A safe query with no acyclicity restriction."""
    while True:
        A = _random_body(schema, k, rng.randint(min_atoms, max_atoms), rng,
                         acyclic=False, repeat=0.15, fresh=0.35)
        if A is not None:
            return canonical_query(A)


def random_tree(schema: Schema, max_facts: int, rng: random.Random, *, min_facts: int = 1) -> PointedStructure:
    """Connected acyclic structure rooted at its single distinguished element."""
    unary = [r for r, a in schema.relations if a == 1]
    binary = [r for r, a in schema.relations if a == 2]
    n_facts = rng.randint(min_facts, max_facts)
    nodes = ["t0"]
    facts: set[Fact] = set()
    attempts = 0
    while len(facts) < n_facts and attempts < 50 * n_facts:
        attempts += 1
        x = rng.choice(nodes)
        if binary and (not unary or rng.random() < 0.6):
            y = f"t{len(nodes)}"
            rel = rng.choice(binary)
            facts.add(Fact(rel, (x, y) if rng.random() < 0.5 else (y, x)))
            nodes.append(y)
        elif unary:
            facts.add(Fact(rng.choice(unary), (x,)))
    return PointedStructure.build(schema, facts, ("t0",), nodes)
