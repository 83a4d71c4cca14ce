"""Brute-force enumerators used as independent oracles at small scale."""

from __future__ import annotations

import itertools
from typing import Iterator

from .algebra import partitions
from .hom import find_homomorphism
from .structure import (
    Fact,
    PointedStructure,
    Schema,
    canonical_key,
    from_canonical_key,
    identity_partition,
    is_safe,
)


def dist_patterns(k: int, coarser=None) -> list[tuple[int, ...]]:
    """Restricted-growth strings of length ``k``; optionally refining ``coarser``.

    ``coarser`` is a partition of positions given as blocks.
    """
    out = []
    for p in partitions(list(range(k))):
        if coarser is not None:
            block_of = {i: j for j, b in enumerate(coarser) for i in b}
            if not all(len({block_of[i] for i in b}) == 1 for b in p):
                continue
        label = {}
        for j, b in enumerate(sorted(p, key=min)):
            for i in b:
                label[i] = j
        out.append(tuple(label[i] for i in range(k)))
    return sorted(out)


def naive_structures(schema: Schema, n: int, k: int) -> Iterator[PointedStructure]:
    """Every structure on elements ``e0..e{n-1}`` with every dist tuple (not up to isomorphism)."""
    elems = [f"e{i}" for i in range(n)]
    facts = [
        Fact(r, args) for r, ar in schema.relations for args in itertools.product(elems, repeat=ar)
    ]
    for dist in itertools.product(elems, repeat=k):
        for mask in range(1 << len(facts)):
            chosen = [f for i, f in enumerate(facts) if (mask >> i) & 1]
            yield PointedStructure.build(schema, chosen, dist, elems)


def structures_up_to_iso(schema: Schema, n: int, k: int) -> list[PointedStructure]:
    seen = {}
    for S in naive_structures(schema, n, k):
        key = canonical_key(S)
        if key not in seen:
            seen[key] = S
    return [from_canonical_key(schema, key) for key in sorted(seen)]


def pullback(A: PointedStructure, images: dict[str, str]) -> PointedStructure:
    """Largest structure on ``images``' keys that maps to ``A`` through ``images``."""
    pre: dict[str, list[str]] = {}
    for c, a in images.items():
        pre.setdefault(a, []).append(c)
    facts = []
    for f in A.sorted_facts:
        pools = [sorted(pre.get(a, [])) for a in f.args]
        for args in itertools.product(*pools):
            facts.append(Fact(f.relation, args))
    return facts


def maximal_free_subsets(
    A: PointedStructure, domain, dist, facts: list[Fact], *, limit: int = 2_000_000
) -> list[frozenset]:
    """Maximal subsets of ``facts`` that ``A`` does not map into.

    Branches on the facts hit by a witness homomorphism. The result may
    contain non-maximal sets as well, which is harmless for a coverage check.
    """
    all_facts = frozenset(facts)
    schema = A.schema
    leaves: list[frozenset] = []
    seen: set[frozenset] = set()
    stack = [frozenset()]
    visited = 0
    while stack:
        removed = stack.pop()
        if removed in seen:
            continue
        seen.add(removed)
        visited += 1
        if visited > limit:
            raise RuntimeError("fact-subset search exceeded its node limit")
        current = all_facts - removed
        S = PointedStructure(schema, frozenset(domain), current, dist)
        h = find_homomorphism(A, S)
        if h is None:
            leaves.append(current)
            continue
        hit = sorted({Fact(f.relation, tuple(h[x] for x in f.args)) for f in A.facts})
        for f in hit:
            stack.append(removed | {f})
    # keep only inclusion-maximal leaves
    leaves.sort(key=len, reverse=True)
    maximal: list[frozenset] = []
    for L in leaves:
        if not any(L < M for M in maximal):
            maximal.append(L)
    return maximal


def candidates_below(
    A: PointedStructure, max_elems: int, *, safe_only: bool = False
) -> Iterator[PointedStructure]:
    """Structures strictly below ``A`` that dominate every candidate of that size.

    Every structure ``C`` with at most ``max_elems`` elements, ``C -> A`` and
    ``A -/-> C`` maps into one of the yielded structures (and each yielded
    structure is itself such a ``C``). With ``safe_only`` the guarantee is
    restricted to safe ``C``.
    """
    k = A.k
    coarse = identity_partition(A.dist)
    targets = A.sorted_domain
    for pattern in dist_patterns(k, coarse):
        n_dist = len(set(pattern))
        n_free = max_elems - n_dist
        if n_free < 0:
            continue
        if n_dist + n_free == 0:
            continue
        dist_names = [f"d{j}" for j in range(n_dist)]
        dist = tuple(dist_names[j] for j in pattern)
        dist_images = {dist_names[j]: A.dist[i] for i, j in enumerate(pattern)}
        free_names = [f"v{j}" for j in range(n_free)]
        for images in itertools.combinations_with_replacement(targets, n_free):
            img = dict(dist_images)
            img.update(zip(free_names, images))
            facts = pullback(A, img)
            domain = dist_names + free_names
            for leaf in maximal_free_subsets(A, domain, dist, facts):
                C = PointedStructure(A.schema, frozenset(domain), leaf, dist)
                if safe_only and not is_safe(C):
                    continue
                yield C


# rooted trees


def rooted_trees(schema: Schema, max_nodes: int) -> list[PointedStructure]:
    """Connected acyclic structures with one distinguished root, up to isomorphism.

    Binary relations give labelled edges in either direction; unary
    relations give node labels. Relations of higher arity are not supported.
    """
    unary = [r for r, a in schema.relations if a == 1]
    binary = [r for r, a in schema.relations if a == 2]
    if any(a > 2 for _, a in schema.relations):
        raise ValueError("rooted tree enumeration supports unary and binary relations only")
    labels = [frozenset(c) for r in range(len(unary) + 1) for c in itertools.combinations(unary, r)]
    edge_types = [(r, fwd) for r in binary for fwd in (True, False)]

    # shape(n) = sorted tuple representation of rooted trees with n nodes
    memo: dict[int, list] = {}

    def trees(n: int) -> list:
        if n in memo:
            return memo[n]
        out = []
        for lab in labels:
            for kids in forests(n - 1, None):
                out.append((tuple(sorted(lab)), kids))
        memo[n] = out
        return out

    fmemo: dict = {}

    def forests(n: int, bound) -> list:
        """Multisets of (edge type, subtree) with ``n`` nodes total, items <= bound."""
        key = (n, bound)
        if key in fmemo:
            return fmemo[key]
        if n == 0:
            return [()]
        out = []
        for size in range(1, n + 1):
            for t in trees(size):
                for e in edge_types:
                    item = (e, size, t)
                    if bound is not None and item > bound:
                        continue
                    for rest in forests(n - size, item):
                        out.append((item,) + rest)
        fmemo[key] = out
        return out

    result = []
    for n in range(1, max_nodes + 1):
        for t in trees(n):
            result.append(_tree_to_structure(schema, t))
    return result


def _tree_to_structure(schema: Schema, tree) -> PointedStructure:
    facts = []
    counter = itertools.count()

    def emit(node, name):
        lab, kids = node
        for r in lab:
            facts.append(Fact(r, (name,)))
        for (r, fwd), _size, child in kids:
            cname = f"t{next(counter)}"
            facts.append(Fact(r, (name, cname) if fwd else (cname, name)))
            emit(child, cname)

    root = f"t{next(counter)}"
    emit(tree, root)
    return PointedStructure.build(schema, facts, (root,), [root])


def c_acyclic_structures(schema: Schema, n: int, k: int) -> list[PointedStructure]:
    """c-acyclic structures on exactly ``n`` elements up to isomorphism.

    Every non-distinguished element occurs in a fact; the single fact-free
    point is included for ``n == 1``. c-acyclicity is closed under removing
    facts, so the search prunes as soon as a partial fact set has a cycle.
    """
    from .structure import is_c_acyclic

    elems = [f"e{i}" for i in range(n)]
    facts = [
        Fact(r, args) for r, ar in schema.relations for args in itertools.product(elems, repeat=ar)
    ]
    seen: dict = {}
    for pattern in dist_patterns(k):
        if len(set(pattern)) > n:
            continue
        dist = tuple(elems[j] for j in pattern)
        dset = set(dist)
        usable = [f for f in facts if all(f.args.count(x) == 1 or x in dset for x in f.args)]

        def grow(i: int, chosen: list[Fact]):
            if i == len(usable):
                S = PointedStructure.build(schema, chosen, dist, elems)
                active = S.active_elements
                if all(x in active or x in dset for x in elems) or (n == 1 and not chosen):
                    seen.setdefault(canonical_key(S), S)
                return
            grow(i + 1, chosen)
            chosen.append(usable[i])
            S = PointedStructure.build(schema, chosen, dist, elems)
            if is_c_acyclic(S):
                grow(i + 1, chosen)
            chosen.pop()

        grow(0, [])
    return [seen[key] for key in sorted(seen)]
