"""Homomorphism search, enumeration and cores.

Candidate sets are Python ints used as bitsets over the target's sorted
domain. Two search paths exist: a dynamic program over the incidence forest
for sources that are c-acyclic, and backtracking with arc consistency for
everything else. ``method="auto"`` picks the former whenever it applies.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .structure import Fact, PointedStructure, StructureError, is_c_acyclic

Homomorphism = dict  # element of source -> element of target


class Cancelled(Exception):
    """Raised when a :class:`CancelToken` fires during a search."""


class CancelToken:
    def __init__(self):
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()

    def check(self) -> None:
        if self._event.is_set():
            raise Cancelled()


class HomCapExceeded(StructureError):
    pass


def _check_compatible(A: PointedStructure, B: PointedStructure) -> None:
    if A.schema != B.schema:
        raise StructureError(f"schema mismatch: {A.schema} vs {B.schema}")
    if A.k != B.k:
        raise StructureError(f"distinguished tuple length mismatch: {A.k} vs {B.k}")


def _bits(m: int) -> Iterator[int]:
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


class _Target:
    """Index of a target structure, cached on the structure object."""

    def __init__(self, B: PointedStructure):
        self.elems = B.sorted_domain
        self.index = {x: i for i, x in enumerate(self.elems)}
        self.full = (1 << len(self.elems)) - 1
        self.tuples: dict[str, list[tuple[int, ...]]] = {n: [] for n in B.schema.names}
        for f in B.facts:
            self.tuples[f.relation].append(tuple(self.index[x] for x in f.args))
        for ts in self.tuples.values():
            ts.sort()
        self.tuple_sets = {r: set(ts) for r, ts in self.tuples.items()}
        self.unary: dict[str, int] = {}
        self.fwd: dict[str, list[int]] = {}
        self.bwd: dict[str, list[int]] = {}
        self.loops: dict[str, int] = {}
        self.has_out: dict[str, int] = {}
        self.has_in: dict[str, int] = {}
        n = len(self.elems)
        for name, ar in B.schema.relations:
            if ar == 1:
                m = 0
                for (v,) in self.tuples[name]:
                    m |= 1 << v
                self.unary[name] = m
            elif ar == 2:
                fwd = [0] * n
                bwd = [0] * n
                loops = 0
                for v, w in self.tuples[name]:
                    fwd[v] |= 1 << w
                    bwd[w] |= 1 << v
                    if v == w:
                        loops |= 1 << v
                self.fwd[name], self.bwd[name], self.loops[name] = fwd, bwd, loops
                self.has_out[name] = sum(1 << v for v in range(n) if fwd[v])
                self.has_in[name] = sum(1 << w for w in range(n) if bwd[w])


def _target(B: PointedStructure) -> _Target:
    t = B.__dict__.get("_hom_target")
    if t is None:
        t = _Target(B)
        B.__dict__["_hom_target"] = t
    return t


def _revise(f: Fact, T: _Target, dom: dict[str, int]) -> list[str] | None:
    """Prune candidate sets through one source fact.

    Returns the variables whose sets shrank, or ``None`` on a wipe-out.
    """
    args = f.args
    changed = []
    if len(args) == 1:
        x = args[0]
        new = dom[x] & T.unary[f.relation]
        if new != dom[x]:
            if not new:
                return None
            dom[x] = new
            changed.append(x)
        return changed
    if len(args) == 2:
        x, y = args
        if x == y:
            new = dom[x] & T.loops[f.relation]
            if not new:
                return None
            if new != dom[x]:
                dom[x] = new
                changed.append(x)
            return changed
        dx, dy = dom[x], dom[y]
        if dx == T.full:
            sup = T.has_in[f.relation]
        else:
            fwd = T.fwd[f.relation]
            sup = 0
            for v in _bits(dx):
                sup |= fwd[v]
        ny = dy & sup
        if not ny:
            return None
        if ny == T.full:
            supx = T.has_out[f.relation]
        else:
            bwd = T.bwd[f.relation]
            supx = 0
            for w in _bits(ny):
                supx |= bwd[w]
        nx = dx & supx
        if not nx:
            return None
        if nx != dx:
            dom[x] = nx
            changed.append(x)
        if ny != dy:
            dom[y] = ny
            changed.append(y)
        return changed
    # general arity: scan target tuples
    sup = {x: 0 for x in args}
    for t in T.tuples[f.relation]:
        seen: dict[str, int] = {}
        ok = True
        for x, v in zip(args, t):
            if not (dom[x] >> v) & 1 or seen.setdefault(x, v) != v:
                ok = False
                break
        if ok:
            for x, v in zip(args, t):
                sup[x] |= 1 << v
    for x in dict.fromkeys(args):
        new = dom[x] & sup[x]
        if not new:
            return None
        if new != dom[x]:
            dom[x] = new
            changed.append(x)
    return changed


class _Problem:
    def __init__(self, A: PointedStructure, B: PointedStructure, token: CancelToken | None):
        self.A, self.B = A, B
        self.T = _target(B)
        self.token = token
        self.vars = A.sorted_domain
        self.facts_of = A.facts_of

    def initial(self, restrict: dict[str, int] | None = None) -> dict[str, int] | None:
        T = self.T
        dom = {x: T.full for x in self.vars}
        for a, b in zip(self.A.dist, self.B.dist):
            dom[a] &= 1 << T.index[b]
        if restrict:
            for x, m in restrict.items():
                dom[x] &= m
        if any(v == 0 for v in dom.values()):
            return None
        return dom

    def propagate(self, dom: dict[str, int], queue: list[Fact]) -> bool:
        pending = list(dict.fromkeys(queue))
        inq = set(pending)
        while pending:
            f = pending.pop()
            inq.discard(f)
            changed = _revise(f, self.T, dom)
            if changed is None:
                return False
            for x in changed:
                for g in self.facts_of[x]:
                    if g not in inq:
                        inq.add(g)
                        pending.append(g)
        return True

    def solutions(self, dom: dict[str, int]) -> Iterator[dict[str, int]]:
        if not self.propagate(dom, self.A.sorted_facts):
            return
        yield from self._search(dom)

    def _search(self, dom: dict[str, int]) -> Iterator[dict[str, int]]:
        # explicit stack: search depth can exceed the interpreter's recursion limit
        stack = [(dom, None, None)]
        while stack:
            if self.token is not None:
                self.token.check()
            cur, var, values = stack[-1]
            if var is None:
                var = self._branch_var(cur)
                if var is None:
                    stack.pop()
                    yield cur
                    continue
                values = _bits(cur[var])
                stack[-1] = (cur, var, values)
            for v in values:
                child = dict(cur)
                child[var] = 1 << v
                if self.propagate(child, self.facts_of[var]):
                    stack.append((child, None, None))
                    break
            else:
                stack.pop()

    def _branch_var(self, dom: dict[str, int]) -> str | None:
        best, best_count = None, None
        for x in self.vars:
            c = dom[x].bit_count()
            if c > 1 and (best_count is None or c < best_count):
                best, best_count = x, c
                if c == 2:
                    break
        return best

    def decode(self, dom: dict[str, int]) -> Homomorphism:
        elems = self.T.elems
        return {x: elems[(m & -m).bit_length() - 1] for x, m in dom.items()}


# dynamic program for c-acyclic sources


def _dp_find(A: PointedStructure, B: PointedStructure, restrict: dict[str, int] | None = None) -> Homomorphism | None:
    T = _target(B)
    fixed: dict[str, int] = {}
    for a, b in zip(A.dist, B.dist):
        v = T.index[b]
        if fixed.setdefault(a, v) != v:
            return None
    if restrict:
        for a, v in fixed.items():
            if a in restrict and not (restrict[a] >> v) & 1:
                return None
    if not T.elems:
        return {} if not A.domain else None

    facts = A.sorted_facts
    free = [x for x in A.sorted_domain if x not in fixed]
    facts_of = A.facts_of

    def tuple_ok(f: Fact, t) -> bool:
        for x, v in zip(f.args, t):
            if x in fixed and fixed[x] != v:
                return False
        return True

    # facts with no free argument are plain membership checks
    for f in facts:
        if all(x in fixed for x in f.args):
            if tuple(fixed[x] for x in f.args) not in T.tuple_sets[f.relation]:
                return None

    cand: dict[str, int] = {}
    parent_fact: dict[str, Fact | None] = {}
    children: dict[str, list[tuple[Fact, list[str]]]] = {}
    order: list[str] = []
    visited_facts: set[Fact] = set()
    for root in free:
        if root in parent_fact:
            continue
        parent_fact[root] = None
        stack = [root]
        while stack:
            x = stack.pop()
            order.append(x)
            children[x] = []
            for f in facts_of[x]:
                if f in visited_facts:
                    continue
                visited_facts.add(f)
                kids = [y for y in dict.fromkeys(f.args) if y != x and y not in fixed]
                for y in kids:
                    parent_fact[y] = f
                    stack.append(y)
                children[x].append((f, kids))

    def support(x: str, f: Fact, kids: list[str]) -> int:
        sup = 0
        for t in T.tuples[f.relation]:
            if not tuple_ok(f, t):
                continue
            v = None
            ok = True
            for y, w in zip(f.args, t):
                if y == x:
                    if v is None:
                        v = w
                    elif v != w:
                        ok = False
                        break
                elif y not in fixed and not (cand[y] >> w) & 1:
                    ok = False
                    break
            if ok:
                sup |= 1 << v
        return sup

    for x in reversed(order):
        m = T.full
        if restrict and x in restrict:
            m &= restrict[x]
        for f, kids in children[x]:
            if not m:
                break
            m &= support(x, f, kids)
        if not m:
            return None
        cand[x] = m

    elems = T.elems
    h: dict[str, int] = dict(fixed)
    for x in order:
        if parent_fact[x] is None:
            h[x] = (cand[x] & -cand[x]).bit_length() - 1
        for f, kids in children[x]:
            for t in T.tuples[f.relation]:
                if not tuple_ok(f, t):
                    continue
                if all(
                    (h[y] == w) if (y == x or y in fixed) else ((cand[y] >> w) & 1)
                    for y, w in zip(f.args, t)
                ):
                    for y, w in zip(f.args, t):
                        if y not in fixed and y != x:
                            h[y] = w
                    break
            else:  # pragma: no cover - cand guarantees a tuple
                raise AssertionError("dynamic program lost a support tuple")
    return {x: elems[v] for x, v in h.items()}


def find_homomorphism(
    A: PointedStructure,
    B: PointedStructure,
    *,
    method: str = "auto",
    restrict: dict[str, set | frozenset] | None = None,
    token: CancelToken | None = None,
) -> Homomorphism | None:
    """Return a homomorphism from ``A`` to ``B`` or ``None``.

    ``restrict`` optionally limits the images of some source elements.
    ``method`` is ``"auto"``, ``"dp"`` (requires c-acyclic ``A``) or
    ``"backtrack"``.
    """
    _check_compatible(A, B)
    T = _target(B)
    masks = None
    if restrict:
        masks = {}
        for x, allowed in restrict.items():
            m = 0
            for y in allowed:
                if y in T.index:
                    m |= 1 << T.index[y]
            masks[x] = m
    if method == "auto":
        method = "dp" if is_c_acyclic(A) else "backtrack"
    if method == "dp":
        if not is_c_acyclic(A):
            raise StructureError("dynamic program needs a c-acyclic source")
        return _dp_find(A, B, masks)
    if method != "backtrack":
        raise ValueError(f"unknown method {method!r}")
    prob = _Problem(A, B, token)
    dom = prob.initial(masks)
    if dom is None:
        return None
    for sol in prob.solutions(dom):
        return prob.decode(sol)
    return None


def has_homomorphism(A: PointedStructure, B: PointedStructure, **kw) -> bool:
    return find_homomorphism(A, B, **kw) is not None


def all_homomorphisms(
    A: PointedStructure, B: PointedStructure, *, cap: int = 10**7, token: CancelToken | None = None
) -> list[Homomorphism]:
    """Every homomorphism, in a deterministic order."""
    _check_compatible(A, B)
    if len(B.domain) ** len(A.domain) > cap:
        raise HomCapExceeded(
            f"{len(B.domain)}^{len(A.domain)} candidate maps exceed the cap of {cap}")
    prob = _Problem(A, B, token)
    dom = prob.initial()
    if dom is None:
        return []
    return [prob.decode(s) for s in prob.solutions(dom)]


def hom_equivalent(A: PointedStructure, B: PointedStructure) -> bool:
    return has_homomorphism(A, B) and has_homomorphism(B, A)


def is_homomorphism(h: Homomorphism, A: PointedStructure, B: PointedStructure) -> bool:
    if set(h) != set(A.domain) or any(h[x] not in B.domain for x in h):
        return False
    if tuple(h[a] for a in A.dist) != B.dist:
        return False
    return all(Fact(f.relation, tuple(h[x] for x in f.args)) in B.facts for f in A.facts)


# cores


def _avoiding(A: PointedStructure, x: str) -> dict[str, frozenset]:
    others = A.domain - {x}
    return {y: others for y in A.domain}


@dataclass(frozen=True)
class CoreResult:
    core: PointedStructure
    retraction: Homomorphism


def compute_core(A: PointedStructure, *, token: CancelToken | None = None) -> CoreResult:
    """Shrink ``A`` through endomorphisms with smaller image until none exists.

    Elements are tried in ascending degree (ties by name). Once an element
    is known to be unavoidable it stays unavoidable in every retract, so it
    is never retried.
    """
    current, retraction = _fold(A)
    stuck: set[str] = set(A.dist)
    while True:
        order = sorted(
            (x for x in current.domain if x not in stuck),
            key=lambda x: (current.degree(x), x),
        )
        progressed = False
        for x in order:
            if token is not None:
                token.check()
            h = find_homomorphism(current, current, restrict=_avoiding(current, x), token=token)
            if h is None:
                stuck.add(x)
                continue
            image = set(h.values())
            current = current.restrict(image)
            retraction = {y: h[v] for y, v in retraction.items()}
            progressed = True
            break
        if not progressed:
            return CoreResult(current, retraction)


def _fold_target(x: str, domain: set, facts: set, facts_of: dict, by_rel: dict) -> str | None:
    """An element ``y`` such that sending ``x`` to ``y`` and fixing the rest is an endomorphism."""
    fx = sorted(facts_of[x])
    if not fx:
        return min((y for y in domain if y != x), default=None)
    f0 = fx[0]
    others = [z for z in f0.args if z != x]
    pos = f0.args.index(x)
    pool = facts_of[others[0]] if others else by_rel[f0.relation]
    cands = set()
    for g in pool:
        if g.relation != f0.relation:
            continue
        y = g.args[pos]
        if y != x and all((a == x and b == y) or (a != x and a == b) for a, b in zip(f0.args, g.args)):
            cands.add(y)
    for y in sorted(cands):
        if all(Fact(f.relation, tuple(y if a == x else a for a in f.args)) in facts for f in fx):
            return y
    return None


_MATRIX_FOLD_LIMIT = 6000


def _fold(A: PointedStructure) -> tuple[PointedStructure, Homomorphism]:
    if A.schema.is_binary and 1 < len(A.domain) <= _MATRIX_FOLD_LIMIT:
        A, moved = _fold_matrix(A)
        B, second = _fold_generic(A)
        return B, {x: second[moved[x]] for x in moved}
    return _fold_generic(A)


def _fold_matrix(A: PointedStructure) -> tuple[PointedStructure, Homomorphism]:
    elems = A.sorted_domain
    index = {x: i for i, x in enumerate(elems)}
    n = len(elems)
    unary = [r for r, ar in A.schema.relations if ar == 1]
    binary = [r for r, ar in A.schema.relations if ar == 2]
    U = np.zeros((n, len(unary)), dtype=bool)
    mats = {r: np.zeros((n, n), dtype=bool) for r in binary}
    uidx = {r: j for j, r in enumerate(unary)}
    for f in A.facts:
        if len(f.args) == 1:
            U[index[f.args[0]], uidx[f.relation]] = True
        else:
            mats[f.relation][index[f.args[0]], index[f.args[1]]] = True
    fixed = np.zeros(n, dtype=bool)
    for a in A.dist_set:
        fixed[index[a]] = True
    alive, image = dominance_fold(U, list(mats.values()), fixed)
    if alive.all():
        return A, {x: x for x in elems}
    keep = frozenset(elems[i] for i in np.flatnonzero(alive))
    return A.restrict(keep), {x: elems[image[index[x]]] for x in elems}


def dominance_fold(U: np.ndarray, mats: list[np.ndarray], fixed: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fold elements onto dominating elements, given unary and binary tables.

    ``U`` is an element-by-label boolean table, ``mats`` holds one adjacency
    matrix per binary relation, ``fixed`` marks elements that must stay.
    ``x`` folds onto ``y`` when every label, out-neighbour, in-neighbour and
    loop of ``x`` is matched at ``y``. Dominance computed on a structure
    stays valid in every induced substructure containing both elements, so
    a whole round of folds can share one dominance matrix.

    Returns the surviving elements and, for every element, its final image.
    """
    n = len(fixed)
    Uf = U.astype(np.float32)
    Mf = [M.astype(np.float32) for M in mats]
    alive = np.ones(n, dtype=bool)
    target = np.arange(n)
    while True:
        idx = np.flatnonzero(alive)
        m = len(idx)
        viol = Uf[idx] @ (1 - Uf[idx]).T if Uf.shape[1] else np.zeros((m, m), dtype=np.float32)
        off_diag = 1 - np.eye(m, dtype=np.float32)
        for M in Mf:
            sub = M[np.ix_(idx, idx)]
            off = sub * off_diag
            viol += off @ (1 - sub).T
            viol += off.T @ (1 - sub)
            loops = np.diag(sub)
            viol += np.outer(loops, 1 - loops)
        dom = viol < 0.5
        np.fill_diagonal(dom, False)
        dom[fixed[idx], :] = False
        local = np.ones(m, dtype=bool)
        for i in range(m):
            if not dom[i].any():
                continue
            cands = np.flatnonzero(dom[i] & local)
            if len(cands):
                local[i] = False
                target[idx[i]] = idx[cands[0]]
        if local.all():
            break
        alive[idx[~local]] = False
    image = target.copy()
    for i in range(n):
        j = i
        while target[j] != j:
            j = target[j]
        image[i] = j
    return alive, image


def _fold_generic(A: PointedStructure) -> tuple[PointedStructure, Homomorphism]:
    """Repeatedly retract single elements onto elements that dominate them.

    A cheap pass before the general search; large products and powers
    usually shrink a lot here.
    """
    domain = set(A.domain)
    facts = set(A.facts)
    facts_of = {x: set(fs) for x, fs in A.facts_of.items()}
    by_rel: dict[str, set] = {}
    for f in facts:
        by_rel.setdefault(f.relation, set()).add(f)
    moved: dict[str, str] = {}
    changed = True
    while changed:
        changed = False
        for x in sorted(domain, key=lambda x: (len(facts_of[x]), x)):
            if x in A.dist_set:
                continue
            y = _fold_target(x, domain, facts, facts_of, by_rel)
            if y is None:
                continue
            for f in facts_of[x]:
                facts.discard(f)
                by_rel[f.relation].discard(f)
                for z in f.args:
                    if z != x:
                        facts_of[z].discard(f)
            del facts_of[x]
            domain.discard(x)
            moved[x] = y
            changed = True
    if not moved:
        return A, {x: x for x in A.domain}

    def image(x):
        while x in moved:
            x = moved[x]
        return x

    current = PointedStructure(A.schema, frozenset(domain), frozenset(facts), A.dist)
    return current, {x: image(x) for x in A.domain}


def core(A: PointedStructure) -> PointedStructure:
    return compute_core(A).core


def is_core(A: PointedStructure) -> bool:
    return all(
        find_homomorphism(A, A, restrict=_avoiding(A, x)) is None
        for x in A.sorted_domain
        if x not in A.dist_set
    )
