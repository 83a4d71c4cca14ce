import itertools
import random

import pytest

from cqlab.cq import (
    ConjunctiveQuery,
    QueryError,
    QueryParseError,
    canonical_query,
    canonical_structure,
    contains,
    decode_cq,
    encode_cq,
    equivalent,
    evaluate,
    satisfies,
)
from cqlab.fixtures import four_path_query, zigzag_structure
from cqlab.generate import random_query, random_structure
from cqlab.hom import find_homomorphism
from cqlab.structure import PointedStructure, Schema, fact


def test_parse_and_encode_round_trip():
    q = decode_cq("schema: P/1, R/2\nq(x) :-  R(x, y) ,P(y)\n")
    assert q.head == ("x",)
    assert set(q.atoms) == {fact("R", "x", "y"), fact("P", "y")}
    assert decode_cq(encode_cq(q)) == q


def test_unsafe_head_rejected():
    with pytest.raises(QueryParseError):
        decode_cq("schema: P/1\nq(x) :- P(y)\n")
    q = decode_cq("schema: P/1\nq(x) :- P(y)\n", strict=False)
    assert q.k == 1


def test_undeclared_relation_rejected():
    with pytest.raises(QueryError):
        ConjunctiveQuery(Schema.of("P/1"), ("x",), (fact("R", "x", "x"),))


def test_canonical_query_renames_variables(apq):
    q = canonical_query(apq)
    assert str(q) == "q(x1) :- P(x1), Q(x1)"
    assert canonical_structure(q).k == 1


def _naive_answers(q, A):
    Q = canonical_structure(q)
    return {
        t for t in itertools.product(sorted(A.domain), repeat=q.k)
        if find_homomorphism(Q, A.with_dist(t), method="backtrack") is not None
    }


def test_evaluate_matches_naive_enumeration():
    schema = Schema.of("P/1", "R/2")
    rng = random.Random(21)
    for _ in range(40):
        q = random_query(schema, rng.randint(0, 2), 4, rng)
        A = random_structure(schema, 4, 0, rng, density=0.4)
        assert evaluate(q, A) == _naive_answers(q, A)


def test_satisfies_uses_dist_tuple(apq):
    A = PointedStructure.build(apq.schema, list(apq.facts) + [fact("Q", "b")], ["a"])
    q = decode_cq("schema: P/1, Q/1\nq(x) :- P(x)\n")
    assert satisfies(q, A)
    assert not satisfies(q, A.with_dist(("b",)))


def test_containment_and_equivalence():
    s = "schema: R/2\n"
    long = decode_cq(s + "q(x) :- R(x,y), R(y,z)\n")
    short = decode_cq(s + "q(x) :- R(x,y)\n")
    redundant = decode_cq(s + "q(x) :- R(x,y), R(x,w)\n")
    assert contains(long, short) and not contains(short, long)
    assert equivalent(short, redundant)


def test_four_path_query_false_on_zigzag():
    q = four_path_query()
    Z = zigzag_structure(6)
    assert evaluate(q, Z) == set()
    assert not satisfies(q, Z)
