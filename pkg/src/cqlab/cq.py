"""Conjunctive queries and their correspondence with pointed structures."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .hom import _Problem, find_homomorphism, has_homomorphism
from .structure import (
    IDENT,
    Fact,
    PointedStructure,
    Schema,
    StructureError,
    StructureParseError,
    is_safe,
)


class QueryError(StructureError):
    pass


class QueryParseError(StructureParseError):
    pass


@dataclass(frozen=True)
class ConjunctiveQuery:
    schema: Schema
    head: tuple[str, ...]
    atoms: tuple[Fact, ...]
    strict: bool = True

    def __post_init__(self):
        atoms = tuple(sorted(dict.fromkeys(Fact(a[0], tuple(a[1])) for a in self.atoms)))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "head", tuple(self.head))
        for a in atoms:
            if a.relation not in self.schema.arities:
                raise QueryError(f"undeclared relation in atom {a}")
            if self.schema.arity(a.relation) != len(a.args):
                raise QueryError(f"arity mismatch in atom {a}")
        if self.strict:
            used = {x for a in atoms for x in a.args}
            missing = [x for x in self.head if x not in used]
            if missing:
                raise QueryError(f"head variable(s) {', '.join(missing)} occur in no atom")

    @property
    def k(self) -> int:
        return len(self.head)

    @property
    def variables(self) -> list[str]:
        return list(dict.fromkeys(itertools.chain(self.head, (x for a in self.atoms for x in a.args))))

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.atoms)
        return f"q({','.join(self.head)}) :- {body}"


_HEAD = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)\s*\(([^)]*)\)\s*:-\s*(.*)$")
_ATOM = re.compile(r"([A-Za-z_][A-Za-z0-9_']*)\s*\(([^)]*)\)")


def decode_cq(text: str, schema: Schema | None = None, strict: bool = True) -> ConjunctiveQuery:
    """Parse ``[schema: ...]`` followed by ``q(x) :- R(x,y), P(y)``.

    Without a schema line (and without ``schema``) the relation arities are
    inferred from the atoms.
    """
    query_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("schema:"):
            try:
                schema = Schema.parse(line[len("schema:"):])
            except StructureError as exc:
                raise QueryParseError("syntax", lineno, str(exc)) from None
            continue
        if query_line is not None:
            raise QueryParseError("syntax", lineno, "only one query per file")
        query_line = (lineno, line)
    if query_line is None:
        raise QueryParseError("syntax", 1, "no query found")
    lineno, line = query_line
    m = _HEAD.match(line)
    if not m:
        raise QueryParseError("syntax", lineno, f"expected 'q(x,...) :- atoms', got {line!r}")
    head = [v.strip() for v in m.group(2).split(",")] if m.group(2).strip() else []
    for v in head:
        if not IDENT.match(v):
            raise QueryParseError("syntax", lineno, f"bad head variable {v!r}")
    body = m.group(3).strip().rstrip(".")
    atoms = []
    pos = 0
    while body[pos:].strip():
        pos = len(body) - len(body[pos:].lstrip())
        am = _ATOM.match(body, pos)
        if not am:
            raise QueryParseError("syntax", lineno, f"cannot parse atom at {body[pos:]!r}")
        args = [v.strip() for v in am.group(2).split(",")]
        if any(not IDENT.match(v) for v in args):
            raise QueryParseError("syntax", lineno, f"bad argument list in {am.group(0)!r}")
        atoms.append(Fact(am.group(1), tuple(args)))
        pos = am.end()
        rest = body[pos:].lstrip()
        if rest.startswith(","):
            pos = len(body) - len(rest) + 1
        elif rest:
            raise QueryParseError("syntax", lineno, f"expected ',' before {rest!r}")
    if schema is None:
        arities: dict[str, int] = {}
        for a in atoms:
            if arities.setdefault(a.relation, len(a.args)) != len(a.args):
                raise QueryParseError("arity-mismatch", lineno, f"{a.relation} used with two arities")
        schema = Schema(tuple(arities.items()))
    for a in atoms:
        if a.relation not in schema.arities:
            raise QueryParseError("undeclared-relation", lineno, f"relation {a.relation} not in schema")
        if schema.arity(a.relation) != len(a.args):
            raise QueryParseError(
                "arity-mismatch", lineno,
                f"{a.relation} has arity {schema.arity(a.relation)} but got {len(a.args)} arguments")
    try:
        return ConjunctiveQuery(schema, tuple(head), tuple(atoms), strict)
    except QueryError as exc:
        raise QueryParseError("unsafe-head", lineno, str(exc)) from None


def encode_cq(q: ConjunctiveQuery) -> str:
    return f"schema: {q.schema}\n{q}\n"


def canonical_structure(q: ConjunctiveQuery) -> PointedStructure:
    return PointedStructure.build(q.schema, q.atoms, q.head, q.variables)


def canonical_query(A: PointedStructure, strict: bool = True) -> ConjunctiveQuery:
    """Query with one variable per element in a fact or in ``dist``.

    Variables are renamed to ``x1..`` (distinguished) and ``y1..`` (others).
    """
    if strict and not is_safe(A):
        raise QueryError("structure is unsafe: a distinguished element occurs in no fact")
    names: dict[str, str] = {}
    for x in A.dist:
        if x not in names:
            names[x] = f"x{len(names) + 1}"
    n_other = 0
    for f in A.sorted_facts:
        for x in f.args:
            if x not in names:
                n_other += 1
                names[x] = f"y{n_other}"
    atoms = tuple(Fact(f.relation, tuple(names[x] for x in f.args)) for f in A.sorted_facts)
    return ConjunctiveQuery(A.schema, tuple(names[x] for x in A.dist), atoms, strict)


def evaluate(q: ConjunctiveQuery, A: PointedStructure) -> set[tuple[str, ...]]:
    """Answers of ``q`` on ``A`` (the distinguished tuple of ``A`` is ignored)."""
    if q.schema != A.schema:
        raise QueryError(f"schema mismatch: {q.schema} vs {A.schema}")
    Q = canonical_structure(q)
    base = A.with_dist(())
    # arc-consistent candidate sets for the head variables
    prob = _Problem(Q.with_dist(()), base, None)
    dom = prob.initial()
    if dom is None or not prob.propagate(dom, Q.sorted_facts):
        return set()
    elems = prob.T.elems
    head_vars = list(dict.fromkeys(q.head))
    choices = [[elems[i] for i in range(len(elems)) if (dom[v] >> i) & 1] for v in head_vars]
    out = set()
    for combo in itertools.product(*choices):
        val = dict(zip(head_vars, combo))
        t = tuple(val[v] for v in q.head)
        if find_homomorphism(Q, A.with_dist(t)) is not None:
            out.add(t)
    return out


def satisfies(q: ConjunctiveQuery, A: PointedStructure) -> bool:
    """Whether the distinguished tuple of ``A`` is an answer of ``q``."""
    return has_homomorphism(canonical_structure(q), A)


def contains(q: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    """``q`` is contained in ``q2``."""
    return has_homomorphism(canonical_structure(q2), canonical_structure(q))


def equivalent(q: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    return contains(q, q2) and contains(q2, q)
