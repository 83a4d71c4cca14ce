import random

import pytest

from cqlab.algebra import (
    SizeCapExceeded,
    binary_decode,
    binary_encode,
    binary_schema,
    direct_product,
    exponentiate,
    fg_disjoint_union,
    partitions,
)
from cqlab.generate import random_structure
from cqlab.hom import has_homomorphism
from cqlab.structure import PointedStructure, Schema, fact

R = Schema.of("R/2")


def test_product_is_greatest_lower_bound(pqr):
    rng = random.Random(11)
    for _ in range(30):
        A, B, C = (random_structure(pqr, 2, 1, rng, density=0.5) for _ in range(3))
        P = direct_product(A, B)
        assert has_homomorphism(P, A) and has_homomorphism(P, B)
        both = has_homomorphism(C, A) and has_homomorphism(C, B)
        assert has_homomorphism(C, P) == both


def test_product_sizes():
    A = PointedStructure.build(R, [fact("R", "a", "b")], ["a"])
    B = PointedStructure.build(R, [fact("R", "c", "d"), fact("R", "d", "c")], ["c"])
    P = direct_product(A, B)
    assert len(P.domain) == 4 and len(P.facts) == 2
    assert len(set(P.dist)) == 1


def test_exponentiation_adjunction():
    # X x C -> B  iff  X -> B^C
    rng = random.Random(12)
    for _ in range(25):
        B = random_structure(R, 2, 0, rng, density=0.5)
        C = random_structure(R, 2, 0, rng, density=0.5)
        X = random_structure(R, 2, 0, rng, density=0.5)
        E = exponentiate(B, C)
        assert has_homomorphism(direct_product(X, C), B) == has_homomorphism(X, E)


def test_exponentiation_cap():
    B = PointedStructure.build(R, [], (), [f"b{i}" for i in range(4)])
    C = PointedStructure.build(R, [], (), [f"c{i}" for i in range(4)])
    with pytest.raises(SizeCapExceeded):
        exponentiate(B, C, cap=100)


def test_fg_union_glues_at_dist():
    A = PointedStructure.build(R, [fact("R", "a", "b")], ["a"])
    B = PointedStructure.build(R, [fact("R", "c", "a")], ["a"])
    U = fg_disjoint_union(A, B)
    assert len(U.domain) == 3 and len(U.facts) == 2
    assert has_homomorphism(A, U) and has_homomorphism(B, U)


def test_binary_encoding_of_ternary_fact():
    T = Schema.of("T/3")
    A = PointedStructure.build(T, [fact("T", "a", "b", "c")], ["a"])
    E = binary_encode(A)
    assert E.schema == binary_schema(T)
    assert len(E.facts) == 3 and len(E.domain) == 4
    assert binary_decode(E, T).trim() == A


def test_decode_of_shared_witness_can_add_facts():
    # two sources for T_1 at one witness decode to two facts
    T = Schema.of("T/2")
    E = PointedStructure.build(binary_schema(T), [fact("T_1", "a", "w"), fact("T_1", "b", "w"), fact("T_2", "c", "w")])
    assert binary_decode(E, T).facts == {fact("T", "a", "c"), fact("T", "b", "c")}


def test_partitions_are_bell_numbers():
    assert [len(partitions(list(range(n)))) for n in range(1, 5)] == [1, 2, 5, 15]
