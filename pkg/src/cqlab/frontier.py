"""Frontier and duality constructions.

A frontier of ``A`` is a finite set of structures strictly below ``A`` in the
homomorphism order such that everything strictly below ``A`` maps into one
of them. A duality of ``A`` is a finite set ``D`` with ``A -> C`` iff ``C``
maps into no member of ``D``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import (
    SizeCapExceeded,
    binary_decode,
    binary_encode,
    binary_schema,
    direct_product,
    dist_from_partition,
    dist_partition,
    exponentiate_with_functions,
    power_tables,
    partitions,
    refines_strictly,
    unsafe_dual_family,
)
from .hom import compute_core, dominance_fold, has_homomorphism
from .structure import (
    Fact,
    PointedStructure,
    Schema,
    StructureError,
    all_facts,
    classify,
    complete_structure,
    fg_components,
    fresh_name,
    is_acyclic,
    is_c_acyclic,
    is_c_connected,
    is_unp,
    reach,
)

SCOPES = ("all-structures", "safe-structures", "connected-acyclic-k1")
METHODS = ("duality-product", "paper-poly", "grafted")


class FrontierError(StructureError):
    """Precondition violated or target has no finite frontier."""


@dataclass(frozen=True)
class Frontier:
    target: PointedStructure
    members: tuple[PointedStructure, ...]
    scope: str = "all-structures"
    method: str = ""
    status: str = "unverified"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class DualitySet:
    target: PointedStructure
    duals: tuple[PointedStructure, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "duals", tuple(self.duals))


def check_basic_conditions(A: PointedStructure, members) -> list[str]:
    """Problems with the first two frontier conditions (empty list if none)."""
    problems = []
    for i, M in enumerate(members):
        if not has_homomorphism(M, A):
            problems.append(f"member {i} does not map to the target")
        if has_homomorphism(A, M):
            problems.append(f"target maps to member {i}")
    return problems


def maximal_elements(structures, *, reduce: bool = True) -> list[PointedStructure]:
    """Core-reduce and keep one representative of each maximal class.

    The order of first occurrence is preserved, so results are deterministic.
    """
    items = [compute_core(S).core if reduce else S for S in structures]
    keep: list[PointedStructure] = []
    for i, S in enumerate(items):
        dominated = False
        for j, T in enumerate(items):
            if i == j or not has_homomorphism(S, T):
                continue
            # S -> T: drop S unless they are equivalent and S comes first
            if not has_homomorphism(T, S) or j < i:
                dominated = True
                break
        if not dominated:
            keep.append(S)
    return keep


def _tidy(structures) -> list[PointedStructure]:
    return [S.compact_names() for S in structures]


# per-component constructions


def _is_case_one(A: PointedStructure) -> bool:
    return len(A.facts) == 1 and all(x in A.dist_set for x in next(iter(A.facts)).args)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise FrontierError(msg)


def case_one_dual(A: PointedStructure) -> PointedStructure:
    (f,) = A.facts
    b = fresh_name("b", A.dist_set)
    elements = sorted(A.dist_set) + [b]
    facts = [g for g in all_facts(A.schema, elements) if g != f]
    return PointedStructure.build(A.schema, facts, A.dist, elements)


def frontier_single_fact_component(A: PointedStructure) -> tuple[Frontier, DualitySet]:
    """Frontier and dual of a single fact over distinguished elements only."""
    _require(_is_case_one(A), "expected a single fact whose arguments are all distinguished")
    _require(is_unp(A), "distinguished tuple must not repeat elements")
    _require(A.domain == A.dist_set, "expected no non-distinguished elements")
    D = case_one_dual(A)
    F = Frontier(A, (direct_product(A, D),), "all-structures", "single-fact")
    return F, DualitySet(A, (D,))


def case_two_member(A: PointedStructure) -> PointedStructure:
    """Pairs (element, fact containing it) plus a loose copy of each distinguished element.

    Distinguished elements stay single; their loose copies ``a@*`` are not
    distinguished. A fact over these elements is kept when it projects to a
    fact of ``A`` and some coordinate is a loose copy or carries a fact other
    than the projected fact itself.
    """
    facts = A.sorted_facts
    fidx = {f: i for i, f in enumerate(facts)}
    loose = "*"

    def name(x: str, f) -> str:
        return f"{x}@{loose if f is loose else fidx[f]}"

    domain = set(A.dist)
    for x in A.sorted_domain:
        if x not in A.dist_set:
            domain.update(name(x, f) for f in A.facts_of[x])
        elif x in A.active_elements:
            domain.add(name(x, loose))
    out = []
    for g in facts:
        choices = []
        for x in g.args:
            if x in A.dist_set:
                choices.append([(x, None), (name(x, loose), loose)])
            else:
                choices.append([(name(x, f), f) for f in A.facts_of[x]])
        for combo in itertools.product(*choices):
            if any(f is not None and f != g for _, f in combo):
                out.append(Fact(g.relation, tuple(n for n, _ in combo)))
    return PointedStructure(A.schema, frozenset(domain), frozenset(out), A.dist)


def _check_component(A: PointedStructure, *, need_core: bool = True) -> None:
    _require(len(fg_components(A)) == 1, "expected an fg-connected structure")
    _require(is_unp(A), "distinguished tuple must not repeat elements")
    _require(is_c_acyclic(A), "expected a c-acyclic structure")
    if need_core:
        _require(compute_core(A).core.domain == A.domain, "expected a core")


def frontier_connected_component(A: PointedStructure, *, check: bool = True) -> Frontier:
    """Single-member frontier of a component with a non-distinguished element in every fact."""
    if check:
        _check_component(A)
        _require(all(any(x not in A.dist_set for x in f.args) for f in A.facts),
                 "every fact must contain a non-distinguished element")
    return Frontier(A, (case_two_member(A),), "all-structures", "component")


def component_frontier_all(A: PointedStructure) -> list[PointedStructure]:
    """Frontier of one component valid against every structure, unsafe ones included."""
    if _is_case_one(A):
        return [direct_product(A, case_one_dual(A))]
    return [case_two_member(A)]


def _pin_relation(schema: Schema, i: int) -> str:
    return fresh_name(f"pin{i}_", set(schema.names))


def duals_from_members(
    A: PointedStructure, members, *, cap: int = 10**6, reduce: bool = True
) -> list[PointedStructure]:
    """Power-structure duals ``(M^A, h)`` for every pinned tuple ``h``.

    A function is pinned at position ``i`` when it sends the ``i``-th
    distinguished element of ``A`` to that of ``M``. The power structure is
    first shrunk to a core of itself with pinned functions marked by unary
    relations, so the retraction keeps pinned functions pinned and every
    dual over the full power maps into one over the shrunk power.
    """
    duals = []
    base = A.with_dist(())
    pins = [_pin_relation(A.schema, i) for i in range(A.k)]
    marked = Schema(A.schema.relations + tuple((r, 1) for r in pins))
    for M in members:
        try:
            T = power_tables(M.with_dist(()), base, cap=cap)
        except SizeCapExceeded as exc:
            raise SizeCapExceeded(f"{exc} (member {M!r})") from None
        col = {x: j for j, x in enumerate(T.cdom)}
        bidx = {x: j for j, x in enumerate(T.bdom)}
        pin_masks = [T.values[:, col[a]] == bidx[m] for a, m in zip(A.dist, M.dist)]
        keep = np.arange(len(T.names))
        if reduce and A.schema.is_binary and not T.sparse:
            unary = [T.tables[r][:, None] for r, ar in A.schema.relations if ar == 1]
            U = np.hstack(unary + [pm[:, None] for pm in pin_masks]) if unary or pin_masks \
                else np.zeros((len(keep), 0), dtype=bool)
            mats = [T.tables[r] for r, ar in A.schema.relations if ar == 2]
            alive, _ = dominance_fold(U, mats, np.zeros(len(keep), dtype=bool))
            keep = np.flatnonzero(alive)
        facts = T.facts(keep)
        names = [T.names[i] for i in keep]
        pinned = [[T.names[i] for i in keep if pm[i]] for pm in pin_masks]
        if reduce:
            extra = [Fact(pins[i], (x,)) for i, xs in enumerate(pinned) for x in xs]
            K = compute_core(PointedStructure(marked, frozenset(names), frozenset(facts + extra), ())).core
            names = sorted(K.domain)
            facts = [f for f in K.facts if f.relation not in pins]
            pinned = [[x for x in xs if x in K.domain] for xs in pinned]
        P = PointedStructure(A.schema, frozenset(names), frozenset(facts), ())
        for h in itertools.product(*pinned):
            duals.append(P.with_dist(h))
    if reduce:
        duals = maximal_elements(duals)
    return duals


def component_dual_set(A: PointedStructure, *, cap: int = 10**6) -> DualitySet:
    _check_component(A)
    if _is_case_one(A):
        return DualitySet(A, (case_one_dual(A),))
    members = maximal_elements(component_frontier_all(A))
    return DualitySet(A, tuple(_tidy(duals_from_members(A, members, cap=cap))))


def duality_from_frontier(A: PointedStructure, F: Frontier | list, *, cap: int = 10**6) -> DualitySet:
    members = F.members if isinstance(F, Frontier) else list(F)
    for M in members:
        if M.schema != A.schema or M.k != A.k:
            raise StructureError("frontier member over a different schema or arity")
    members = maximal_elements(members)
    return DualitySet(A, tuple(_tidy(duals_from_members(A, members, cap=cap))))


def frontier_from_duality(A: PointedStructure, D: DualitySet | list) -> Frontier:
    duals = D.duals if isinstance(D, DualitySet) else list(D)
    for B in duals:
        if B.schema != A.schema or B.k != A.k:
            raise StructureError("dual over a different schema or arity")
    return Frontier(A, tuple(direct_product(A, B) for B in duals), "all-structures", "from-duality")


# whole-structure frontiers for c-acyclic cores


def _graft(A: PointedStructure, comp_facts: frozenset, B: PointedStructure) -> PointedStructure:
    """``(A_i x B)`` together with ``(rest of A) x (complete structure on dom B)``."""
    pn = lambda a, y: f"[{a}|{y}]"
    facts = []
    bfacts: dict[str, list[Fact]] = {}
    for g in B.sorted_facts:
        bfacts.setdefault(g.relation, []).append(g)
    bdom = B.sorted_domain
    for f in A.sorted_facts:
        if f in comp_facts:
            for g in bfacts.get(f.relation, ()):
                facts.append(Fact(f.relation, tuple(pn(a, y) for a, y in zip(f.args, g.args))))
        else:
            for ys in itertools.product(bdom, repeat=len(f.args)):
                facts.append(Fact(f.relation, tuple(pn(a, y) for a, y in zip(f.args, ys))))
    dist = tuple(pn(a, b) for a, b in zip(A.dist, B.dist))
    return PointedStructure.build(A.schema, facts, dist)


def _unp_frontier(A: PointedStructure, method: str, *, augment_unsafe: bool, cap: int) -> tuple[list, str]:
    comps = fg_components(A)
    if method == "duality-product":
        duals = []
        for C in comps:
            duals.extend(component_dual_set(C, cap=cap).duals)
        return [direct_product(A, D) for D in duals], "all-structures"
    if method == "paper-poly":
        members = []
        for i, C in enumerate(comps):
            if _is_case_one(C):
                local = frontier_single_fact_component(C)[0].members
            else:
                local = frontier_connected_component(C, check=False).members
            others = [comps[j] for j in range(len(comps)) if j != i]
            for B in local:
                members.append(_union(others + [B], A))
        scope = "safe-structures"
        if augment_unsafe and A.k:
            members.extend(direct_product(A, U) for U in unsafe_dual_family(A.schema, A.k))
            scope = "all-structures"
        return members, scope
    if method == "grafted":
        members = []
        for C in comps:
            for B in component_frontier_all(C):
                members.append(_graft(A, C.facts, B))
        return members, "all-structures"
    raise ValueError(f"unknown method {method!r}")


def _union(parts: list[PointedStructure], A: PointedStructure) -> PointedStructure:
    from .algebra import fg_disjoint_union

    if not parts:
        return PointedStructure.build(A.schema, [], A.dist)
    return fg_disjoint_union(*parts)


def identity_type_completions(A: PointedStructure) -> list[PointedStructure]:
    """Products ``A x (complete structure, tuple of finer identity type)``."""
    k = A.k
    coarse = dist_partition(A.dist)
    out = []
    for rho in partitions(list(range(k))):
        if refines_strictly(rho, coarse):
            dist = dist_from_partition(rho, k)
            full = complete_structure(A.schema, sorted(set(dist)), dist)
            out.append(direct_product(A, full))
    return out


def frontier_c_acyclic(
    A: PointedStructure,
    method: str = "duality-product",
    *,
    augment_unsafe: bool = False,
    reduce: bool = True,
    cap: int = 10**6,
) -> Frontier:
    """Frontier of a structure whose core is c-acyclic.

    ``method``: ``duality-product`` (products with component duals),
    ``grafted`` (polynomial, one member per component frontier member) or
    ``paper-poly`` (plain fg-union composition; kept for comparison only, it
    is not a frontier in general). ``reduce`` core-reduces the members and
    drops dominated ones.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    cr = compute_core(A).core
    if not is_c_acyclic(cr):
        raise FrontierError("the core of the target is not c-acyclic, so it has no finite frontier")
    blocks = dist_partition(cr.dist)
    unique = tuple(cr.dist[b[0]] for b in blocks)
    base = cr.with_dist(unique)
    members, scope = _unp_frontier(base, method, augment_unsafe=augment_unsafe, cap=cap)
    if len(unique) != cr.k:
        restored = []
        for M in members:
            d = [None] * cr.k
            for j, b in enumerate(blocks):
                for i in b:
                    d[i] = M.dist[j]
            restored.append(M.with_dist(d))
        members = restored + identity_type_completions(cr)
    if reduce:
        members = maximal_elements(members)
    return Frontier(A, tuple(_tidy(members)), scope, method)


# tree frontier for c-connected acyclic structures with one distinguished element


@dataclass(frozen=True)
class _Node:
    label: str  # projection onto the target
    children: tuple  # of (relation, forward: bool, _Node)


def _orient(A: PointedStructure) -> dict[str, list[tuple[str, bool, str]]]:
    root = A.dist[0]
    kids: dict[str, list] = {x: [] for x in A.domain}
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for f in A.facts_of[x]:
            a, b = f.args
            y, fwd = (b, True) if a == x else (a, False)
            if y in seen:
                continue
            seen.add(y)
            kids[x].append((f.relation, fwd, y))
            stack.append(y)
    for x in kids:
        kids[x].sort()
    return kids


def _subtree(kids, x) -> _Node:
    return _Node(x, tuple((r, fwd, _subtree(kids, y)) for r, fwd, y in kids[x]))


def _node_size(n: _Node) -> int:
    return sum(1 + _node_size(c) for _, _, c in n.children)


def _tree_family(kids, x, memo) -> list[_Node]:
    if x in memo:
        return memo[x]
    out = []
    for i, (r, fwd, y) in enumerate(kids[x]):
        ch = [(r2, f2, _subtree(kids, y2)) for j, (r2, f2, y2) in enumerate(kids[x]) if j != i]
        ch.extend((r, fwd, F) for F in _tree_family(kids, y, memo))
        out.append(_Node(x, tuple(ch)))
    memo[x] = out
    return out


def tree_family(A: PointedStructure) -> list[tuple[_Node, int]]:
    """The recursive family at the root with the fact count of each member."""
    kids = _orient(A)
    fam = _tree_family(kids, A.dist[0], {})
    return [(n, _node_size(n)) for n in fam]


def _graft_copies(A: PointedStructure, root: _Node, kids) -> PointedStructure:
    parent: dict[str, tuple[str, bool, str]] = {}
    for x, lst in kids.items():
        for r, fwd, y in lst:
            parent[y] = (r, fwd, x)
    a0 = A.dist[0]
    facts: list[Fact] = []
    counter = itertools.count()
    named: list[tuple[str, str]] = []  # (node name, projection)

    def emit(node: _Node, name: str):
        named.append((name, node.label))
        for r, fwd, c in node.children:
            cname = f"n{next(counter)}"
            facts.append(Fact(r, (name, cname) if fwd else (cname, name)))
            emit(c, cname)

    root_name = f"n{next(counter)}"
    emit(root, root_name)
    for i, (name, proj) in enumerate(list(named)):
        if proj == a0:
            continue
        copy = lambda x: f"c{i}_{x}"
        for f in A.sorted_facts:
            facts.append(Fact(f.relation, tuple(copy(x) for x in f.args)))
        r, fwd, p = parent[proj]
        facts.append(Fact(r, (copy(p), name) if fwd else (name, copy(p))))
    return PointedStructure.build(A.schema, facts, (root_name,))


@dataclass(frozen=True)
class TreeFrontierInfo:
    totalsize: int
    size: int


def frontier_tree(A: PointedStructure, *, with_info: bool = False):
    """Frontier of a c-connected acyclic target with one distinguished element.

    Members are c-connected, acyclic and keep a single distinguished element.
    Schemas with relations that are not binary go through the binary encoding.
    """
    if A.k != 1:
        raise FrontierError("tree frontier needs exactly one distinguished element")
    flags = classify(A)
    if not (flags.c_connected and flags.acyclic):
        raise FrontierError("tree frontier needs a c-connected acyclic target")
    if all(ar == 2 for _, ar in A.schema.relations):
        members, info = _binary_tree_frontier(A)
    else:
        enc = binary_encode(A)
        raw, info = _binary_tree_frontier(enc)
        members = [reach(binary_decode(M, A.schema)).trim() for M in raw]
    F = Frontier(A, tuple(_tidy(members)), "connected-acyclic-k1", "tree")
    return (F, info) if with_info else F


def _binary_tree_frontier(A: PointedStructure):
    cr = compute_core(A).core
    kids = _orient(cr)
    fam = _tree_family(kids, cr.dist[0], {})
    info = TreeFrontierInfo(
        totalsize=sum(_node_size(n) + 1 for n in fam), size=len(cr.facts))
    return [_graft_copies(cr, n, kids) for n in fam], info
