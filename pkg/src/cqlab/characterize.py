"""Example sets that pin down a conjunctive query up to equivalence."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .algebra import direct_product
from .cq import ConjunctiveQuery, QueryError, canonical_query, canonical_structure, satisfies
from .frontier import Frontier, FrontierError, frontier_c_acyclic, frontier_tree
from .hom import compute_core, has_homomorphism
from .structure import (
    Fact,
    PointedStructure,
    Schema,
    canonical_key,
    raw_canonical_key,
    classify,
    identity_partition,
    is_c_acyclic,
    is_safe,
)


@dataclass(frozen=True)
class ExampleSet:
    positives: tuple[PointedStructure, ...]
    negatives: tuple[PointedStructure, ...]
    query: ConjunctiveQuery

    def __post_init__(self):
        object.__setattr__(self, "positives", tuple(self.positives))
        object.__setattr__(self, "negatives", tuple(self.negatives))

    def without_negative(self, i: int) -> "ExampleSet":
        negs = self.negatives[:i] + self.negatives[i + 1:]
        return ExampleSet(self.positives, negs, self.query)


def characterizing_examples(
    q: ConjunctiveQuery,
    *,
    prune_unsafe: bool = False,
    method: str = "duality-product",
    via_tree: bool = False,
) -> ExampleSet:
    """The canonical structure as the only positive, a frontier as negatives.

    ``prune_unsafe`` drops negatives with a fact-free distinguished element;
    they carry no information against queries whose head variables all
    occur in the body. ``via_tree`` uses the tree construction (unary,
    acyclic, c-connected queries only), which keeps every negative inside
    that class.
    """
    A = canonical_structure(q)
    cr = compute_core(A).core
    if not is_c_acyclic(cr):
        raise FrontierError("query is not equivalent to a c-acyclic query")
    if via_tree:
        F = frontier_tree(A)
    else:
        F = frontier_c_acyclic(A, method)
    negatives = [B for B in F.members if not (prune_unsafe and not is_safe(B))]
    return ExampleSet((A,), tuple(negatives), q)


def fits(q: ConjunctiveQuery, positives, negatives) -> bool:
    return all(satisfies(q, P) for P in positives) and not any(satisfies(q, N) for N in negatives)


def frontier_from_examples(q: ConjunctiveQuery, positives, negatives) -> Frontier:
    if not fits(q, positives, negatives):
        raise QueryError("the query does not fit the examples")
    A = canonical_structure(q)
    return Frontier(A, tuple(direct_product(A, B) for B in negatives), "all-structures", "examples")


@dataclass
class CharacterizationVerdict:
    accepted: bool
    witness: ConjunctiveQuery | None = None
    queries_checked: int = 0
    reasons: list[str] = field(default_factory=list)
    necessary: list[bool] | None = None

    def __bool__(self):
        return self.accepted


def queries_below(
    A: PointedStructure, atom_budget: int, *, strict: bool = True
) -> list[PointedStructure]:
    """Canonical structures of all queries with at most ``atom_budget`` atoms
    that map into ``A`` (one per isomorphism class).

    Grows queries atom by atom, tracking for each variable the element of
    ``A`` it maps to, so only queries true on ``A`` are ever built. Atoms are
    added in nondecreasing order of the fact of ``A`` they map onto; every
    query is still reached since its atoms can be sorted by image.
    """
    from .exhaustive import dist_patterns

    schema_text = str(A.schema)
    aidx = {x: i for i, x in enumerate(A.sorted_domain)}
    afacts = A.sorted_facts

    def labeled_key(facts, dist, labels):
        ext = list(facts) + [(f"#{aidx[a]}", (v,)) for v, a in labels.items()]
        return raw_canonical_key("", labels, ext, dist)

    found: dict[tuple, PointedStructure] = {}
    # state: facts, dist, labels -> smallest image index allowed for the next atom
    level: dict[tuple, tuple] = {}
    for pattern in dist_patterns(A.k, identity_partition(A.dist)):
        names = [f"x{j + 1}" for j in range(len(set(pattern)))]
        dist = tuple(names[j] for j in pattern)
        labels = {names[j]: A.dist[i] for i, j in enumerate(pattern)}
        level[labeled_key((), dist, labels)] = (frozenset(), dist, labels, 0)
    for size in range(atom_budget + 1):
        nxt: dict[tuple, tuple] = {}
        for facts, dist, labels, start in level.values():
            used = set().union(*(f.args for f in facts))
            # the empty Boolean query is safe and belongs to the class
            if not strict or used >= set(dist):
                key = raw_canonical_key(schema_text, labels, facts, dist)
                if key not in found:
                    found[key] = PointedStructure.build(A.schema, facts, dist, labels)
            if size == atom_budget:
                continue
            by_label: dict[str, list[str]] = {}
            for v in sorted(labels):
                by_label.setdefault(labels[v], []).append(v)
            for fi in range(start, len(afacts)):
                f = afacts[fi]
                for args in _atom_choices(f, by_label, len(labels)):
                    atom = Fact(f.relation, tuple(args))
                    if atom in facts:
                        continue
                    new_labels = dict(labels)
                    for v, a in zip(args, f.args):
                        new_labels.setdefault(v, a)
                    nf = facts | {atom}
                    lk = labeled_key(nf, dist, new_labels)
                    old = nxt.get(lk)
                    if old is None or old[3] > fi:
                        nxt[lk] = (nf, dist, new_labels, fi)
        level = nxt
    return list(found.values())


def _atom_choices(f: Fact, by_label, n_vars: int):
    """Argument tuples for an atom mapped onto ``f``.

    Each position takes an existing variable with the right image or a fresh
    one; fresh variables may be shared between positions with equal images.
    """

    def rec(p, chosen, fresh_labels):
        if p == len(f.args):
            yield tuple(chosen)
            return
        a = f.args[p]
        for v in by_label.get(a, []):
            yield from rec(p + 1, chosen + [v], fresh_labels)
        for j, lab in enumerate(fresh_labels):
            if lab == a:
                yield from rec(p + 1, chosen + [f"y{n_vars + j + 1}"], fresh_labels)
        yield from rec(p + 1, chosen + [f"y{n_vars + len(fresh_labels) + 1}"], fresh_labels + [a])

    yield from rec(0, [], [])


def uniquely_characterizes_exhaustive(
    q: ConjunctiveQuery,
    positives,
    negatives,
    atom_budget: int,
    *,
    strict: bool = True,
    necessity: bool = False,
) -> CharacterizationVerdict:
    """Check every query up to ``atom_budget`` atoms: fitting ones must be equivalent to ``q``.

    With ``necessity`` the search runs to the end and also records, for each
    negative, whether dropping it would let an inequivalent query fit
    (``verdict.necessary``).
    """
    v = CharacterizationVerdict(True)
    if not fits(q, positives, negatives):
        v.accepted = False
        v.reasons.append("the query itself does not fit the examples")
        return v
    A = canonical_structure(q)
    if necessity:
        v.necessary = [False] * len(negatives)
    # a fitting query is true on every positive, so it maps into each of them
    base = positives[0] if positives else A
    for Q in queries_below(base, atom_budget, strict=strict):
        v.queries_checked += 1
        if not all(has_homomorphism(Q, P) for P in positives):
            continue
        if has_homomorphism(A, Q) and has_homomorphism(Q, A):
            continue
        hits = []
        for i, N in enumerate(negatives):
            if has_homomorphism(Q, N):
                hits.append(i)
                if not necessity or len(hits) > 1:
                    break
        if necessity and len(hits) == 1:
            v.necessary[hits[0]] = True
        if hits:
            continue
        if v.accepted:
            v.accepted = False
            v.witness = canonical_query(Q, strict=strict)
            v.reasons.append(f"inequivalent query fits the examples: {v.witness}")
        if not necessity:
            return v
    return v


def necessary_negatives(q: ConjunctiveQuery, positives, negatives, atom_budget: int, *, strict: bool = True) -> list[bool]:
    """For each negative, whether dropping it lets an inequivalent query fit within the budget."""
    v = uniquely_characterizes_exhaustive(q, positives, negatives, atom_budget, strict=strict, necessity=True)
    return v.necessary
