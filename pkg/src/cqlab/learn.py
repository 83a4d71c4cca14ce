"""Exact learning of conjunctive queries from membership (and equivalence) oracles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .algebra import binary_decode, binary_schema, direct_product
from .characterize import characterizing_examples
from .cq import ConjunctiveQuery, canonical_query
from .exhaustive import dist_patterns
from .frontier import frontier_c_acyclic
from .hom import compute_core
from .oracle import EquivalenceOracle, MembershipOracle, OracleError
from .structure import (
    Fact,
    PointedStructure,
    Schema,
    StructureError,
    canonical_key,
    is_c_acyclic,
    is_safe,
    one_point_full,
)


class LearnError(RuntimeError):
    pass


class IterationCapExceeded(LearnError):
    pass


@dataclass
class LearnReport:
    learned: ConjunctiveQuery
    membership_calls: int = 0
    equivalence_calls: int = 0
    iterations: int = 0
    hypothesis_domain_sizes: list[int] = field(default_factory=list)


def minimize_positive(A: PointedStructure, o: MembershipOracle, *, check: bool = True) -> PointedStructure:
    """Drop facts one at a time while the oracle still says yes.

    With ``check`` the input itself is queried first (one extra call);
    learners that already know the answer pass ``check=False``.
    """
    if check and not o(A):
        raise LearnError("membership oracle rejects the structure to be minimized")
    current = A.trim()
    changed = True
    while changed:
        changed = False
        for f in current.sorted_facts:
            if f not in current.facts:
                continue
            smaller = current.with_facts(current.facts - {f}).trim()
            if o(smaller):
                current = smaller
                changed = True
    return current


# c-acyclicity repair


def _non_dist_edges(A: PointedStructure) -> dict[str, list[tuple[Fact, str]]]:
    adj: dict[str, list[tuple[Fact, str]]] = {}
    for f in A.sorted_facts:
        if len(f.args) != 2:
            continue
        c, d = f.args
        if c == d or c in A.dist_set or d in A.dist_set:
            continue
        adj.setdefault(c, []).append((f, d))
        adj.setdefault(d, []).append((f, c))
    return adj


def _on_cycle(A: PointedStructure, e: Fact, length: int, adj) -> bool:
    """Whether ``e`` lies on a simple cycle of ``length`` facts avoiding ``dist``."""
    c, d = e.args
    if c in A.dist_set or d in A.dist_set:
        return False
    if c == d:
        return length == 1
    if length < 2:
        return False

    def walk(x: str, used_facts: set, seen: set, steps_left: int) -> bool:
        if steps_left == 0:
            return x == c
        for g, y in adj.get(x, []):
            if g in used_facts:
                continue
            if y == c:
                if steps_left == 1:
                    return True
                continue
            if y in seen:
                continue
            used_facts.add(g)
            seen.add(y)
            if walk(y, used_facts, seen, steps_left - 1):
                return True
            used_facts.discard(g)
            seen.discard(y)
        return False

    return walk(d, {e}, {c, d}, length - 1)


def bad_facts(A: PointedStructure, length: int) -> list[Fact]:
    """Facts on a cycle of exactly ``length`` facts with no distinguished element."""
    adj = _non_dist_edges(A)
    return [f for f in A.sorted_facts if len(f.args) == 2 and _on_cycle(A, f, length, adj)]


def _split_copies(A: PointedStructure, e: Fact) -> PointedStructure:
    """Two copies of ``A`` without ``e`` glued at ``dist``, plus the two crossing copies of ``e``."""

    def copy(x: str, i: int) -> str:
        return x if x in A.dist_set else f"{x}.{i}"

    facts = set()
    for f in A.facts:
        if f == e:
            continue
        for i in (1, 2):
            facts.add(Fact(f.relation, tuple(copy(x, i) for x in f.args)))
    c, d = e.args
    facts.add(Fact(e.relation, (copy(c, 1), copy(d, 2))))
    facts.add(Fact(e.relation, (copy(c, 2), copy(d, 1))))
    return PointedStructure.build(A.schema, facts, A.dist)


def cc_transform(
    A: PointedStructure, o: MembershipOracle, *, check: bool = True, max_rounds: int = 10_000
) -> PointedStructure:
    """Turn a positive example over a binary schema into a c-acyclic, fact-minimal one.

    Cycles avoiding ``dist`` are removed by increasing length ``m + 1``: a
    bad fact (the least one in sort order) is split across two copies of
    the structure, then the result is minimized again.
    """
    if not A.schema.is_binary:
        raise StructureError("cc_transform needs relations of arity at most 2; encode the structure first")
    current = minimize_positive(A, o, check=check).compact_names()
    m = 0
    rounds = 0
    while m < len(current.facts):
        bad = bad_facts(current, m + 1)
        if not bad:
            m += 1
            continue
        rounds += 1
        if rounds > max_rounds:
            raise IterationCapExceeded(f"cycle repair did not settle within {max_rounds} rounds")
        current = minimize_positive(_split_copies(current, bad[0]), o, check=False).compact_names()
    return current


# learners


class _Decoded:
    """Membership oracle over the binary encoding, answered by the original oracle."""

    def __init__(self, o: MembershipOracle, schema: Schema):
        self.o, self.schema = o, schema

    def __call__(self, B: PointedStructure) -> bool:
        return self.o(binary_decode(B, self.schema))


def _result_query(A: PointedStructure) -> ConjunctiveQuery:
    return canonical_query(compute_core(A.trim()).core.compact_names())


def learn_membership(
    o: MembershipOracle,
    schema: Schema,
    k: int,
    *,
    method: str = "grafted",
    max_iterations: int = 1000,
) -> LearnReport:
    """Learn a goal equivalent to a c-acyclic query with membership queries only.

    Works over the binary encoding of ``schema``. The hypothesis starts as
    the repaired one-point structure with every fact and is replaced by a
    repaired frontier member whenever the oracle accepts one. The default
    frontier construction is the polynomial one; the power-based one is
    exponential in the size of a component and only usable on tiny goals.
    """
    star = binary_schema(schema)
    oracle = _Decoded(o, schema)
    start_calls = o.calls
    full = one_point_full(star, k)
    if not oracle(full):
        raise OracleError("membership oracle rejects the structure carrying every fact")
    H = cc_transform(full, oracle, check=False)
    report = LearnReport(learned=None, hypothesis_domain_sizes=[len(H.domain)])
    while True:
        report.iterations += 1
        if report.iterations > max_iterations:
            raise IterationCapExceeded(
                f"no convergence after {max_iterations} iterations; is the goal equivalent to a c-acyclic query?")
        accepted = None
        for M in frontier_c_acyclic(H, method).members:
            if oracle(M):
                accepted = M
                break
        if accepted is None:
            break
        H = cc_transform(accepted, oracle, check=False)
        if len(H.domain) <= report.hypothesis_domain_sizes[-1]:
            raise OracleError("hypothesis did not grow; the oracle answers are inconsistent")
        report.hypothesis_domain_sizes.append(len(H.domain))
    report.learned = _result_query(binary_decode(H, schema))
    report.membership_calls = o.calls - start_calls
    return report


def learn_membership_equivalence(
    mo: MembershipOracle,
    eo: EquivalenceOracle,
    schema: Schema,
    k: int,
    *,
    max_iterations: int = 1000,
) -> LearnReport:
    """Learn any conjunctive query with membership and equivalence queries.

    Each counterexample is multiplied into the hypothesis and the product
    minimized, so the hypothesis domain grows every round.
    """
    m0, e0 = mo.calls, eo.calls
    full = one_point_full(schema, k)
    if not mo(full):
        raise OracleError("membership oracle rejects the structure carrying every fact")
    H = minimize_positive(full, mo, check=False)
    report = LearnReport(learned=None, hypothesis_domain_sizes=[len(H.domain)])
    while True:
        report.iterations += 1
        if report.iterations > max_iterations:
            raise IterationCapExceeded(f"no convergence after {max_iterations} iterations")
        hyp = canonical_query(H)
        C = eo(hyp)
        if C is None:
            report.learned = hyp
            break
        P = direct_product(C, H)
        if not mo(P):
            raise OracleError("counterexample is not a positive example of the goal")
        H = minimize_positive(P, mo, check=False).compact_names()
        if len(H.domain) <= report.hypothesis_domain_sizes[-1]:
            raise OracleError("hypothesis did not grow; the counterexample was not valid")
        report.hypothesis_domain_sizes.append(len(H.domain))
    report.membership_calls = mo.calls - m0
    report.equivalence_calls = eo.calls - e0
    return report


def c_acyclic_cores(schema: Schema, k: int, max_atoms: int):
    """Safe c-acyclic cores with ``k`` distinguished elements, by increasing atom count.

    One representative per isomorphism class. Removing a fact never creates
    a cycle, so growing fact by fact from the bare distinguished tuples
    reaches every such structure.
    """
    level: dict[tuple, PointedStructure] = {}
    for pattern in dist_patterns(k):
        names = [f"x{j + 1}" for j in range(len(set(pattern)))]
        S = PointedStructure.build(schema, [], tuple(names[j] for j in pattern), names)
        level.setdefault(canonical_key(S), S)
    for _size in range(1, max_atoms + 1):
        nxt: dict[tuple, PointedStructure] = {}
        for S in level.values():
            elems = S.sorted_domain
            for rel, ar in schema.relations:
                for args in _arg_tuples(elems, ar):
                    f = Fact(rel, args)
                    if f in S.facts:
                        continue
                    T = PointedStructure.build(schema, list(S.facts) + [f], S.dist, list(S.domain))
                    if not is_c_acyclic(T):
                        continue
                    nxt.setdefault(canonical_key(T), T)
        level = nxt
        out = []
        for key in sorted(level):
            T = level[key]
            if is_safe(T) and len(compute_core(T).core.domain) == len(T.domain):
                out.append(T)
        yield from out


def _arg_tuples(elems: list[str], ar: int):
    """Argument tuples over existing elements and fresh ones numbered by first use."""
    n = len(elems)

    def rec(prefix, n_fresh):
        if len(prefix) == ar:
            yield tuple(prefix)
            return
        for x in elems:
            yield from rec(prefix + [x], n_fresh)
        for j in range(n_fresh + 1):
            yield from rec(prefix + [f"y{n + j}"], max(n_fresh, j + 1))

    yield from rec([], 0)


def learn_by_enumeration(o: MembershipOracle, schema: Schema, k: int, size_cap: int) -> LearnReport:
    """Try c-acyclic queries by increasing size until one's characterizing examples all agree."""
    start = o.calls
    report = LearnReport(learned=None)
    for S in c_acyclic_cores(schema, k, size_cap):
        report.iterations += 1
        q = canonical_query(S)
        ex = characterizing_examples(q, prune_unsafe=True)
        if all(o(P) for P in ex.positives) and not any(o(N) for N in ex.negatives):
            report.learned = q
            report.hypothesis_domain_sizes.append(len(S.domain))
            report.membership_calls = o.calls - start
            return report
    raise LearnError(f"no c-acyclic query with at most {size_cap} atoms agrees with the oracle")
