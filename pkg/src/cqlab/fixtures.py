"""Small named structures and queries used in tests and examples."""

from __future__ import annotations

from .cq import ConjunctiveQuery, decode_cq
from .structure import Fact, PointedStructure, Schema

_PATH = "R(y1,y2), R(y2,y3), R(y3,y4), R(y4,y5)"


def pq_point() -> PointedStructure:
    """One distinguished element carrying both P and Q."""
    S = Schema.of("P/1", "Q/1")
    return PointedStructure.build(S, [Fact("P", ("a",)), Fact("Q", ("a",))], ("a",))


def four_path_query() -> ConjunctiveQuery:
    """Boolean query asking for a directed R-path with four edges."""
    return decode_cq(f"q() :- {_PATH}")


def four_path_with_marker() -> ConjunctiveQuery:
    """Unary query: ``x`` has P and a disconnected four-edge path exists."""
    return decode_cq(f"schema: P/1, R/2\nq(x) :- P(x), {_PATH}")


def four_path_with_apex() -> ConjunctiveQuery:
    """Unary query: ``x`` has an edge to every node of a four-edge path."""
    apex = ", ".join(f"R(x,y{i})" for i in range(1, 6))
    return decode_cq(f"q(x) :- {_PATH}, {apex}")


def zigzag_structure(n: int) -> PointedStructure:
    """Acyclic R-structure of ``n`` interleaved paths with no directed path of length four.

    Odd strands are paths z1->z2->z3->z4, even strands z2->...->z5; every
    even strand ``i`` is tied to its neighbours by z3(i)->z4(i-1) and
    z2(i)->z3(i+1). It maps onto the four-edge path by z_j -> y_j.
    """
    def z(i: int, j: int) -> str:
        return f"z{i}_{j}"

    facts = set()
    for i in range(1, n + 1):
        js = (1, 2, 3) if i % 2 else (2, 3, 4)
        for j in js:
            facts.add(Fact("R", (z(i, j), z(i, j + 1))))
        if i % 2 == 0:
            facts.add(Fact("R", (z(i, 3), z(i - 1, 4))))
            if i + 1 <= n:
                facts.add(Fact("R", (z(i, 2), z(i + 1, 3))))
    return PointedStructure.build(Schema.of("R/2"), facts, ())
