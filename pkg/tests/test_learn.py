import random

import pytest

from cqlab.cq import canonical_structure, decode_cq, equivalent
from cqlab.fixtures import four_path_query, four_path_with_apex, four_path_with_marker
from cqlab.generate import random_c_acyclic_query
from cqlab.learn import (
    LearnError,
    bad_facts,
    cc_transform,
    learn_by_enumeration,
    learn_membership,
    learn_membership_equivalence,
    minimize_positive,
)
from cqlab.oracle import EquivalenceOracle, MembershipOracle, OracleError
from cqlab.structure import PointedStructure, Schema, StructureError, fact, is_c_acyclic


def test_minimize_drops_irrelevant_facts():
    q = decode_cq("schema: P/1, Q/1, R/2\nq(x) :- P(x), Q(x)\n")
    A = PointedStructure.build(q.schema, [fact("P", "a"), fact("Q", "a"), fact("R", "a", "a")], ["a"])
    o = MembershipOracle.for_goal(q)
    assert minimize_positive(A, o).facts == {fact("P", "a"), fact("Q", "a")}


def test_minimize_refuses_negative_input():
    q = decode_cq("schema: P/1, Q/1\nq(x) :- P(x)\n")
    A = PointedStructure.build(q.schema, [fact("Q", "a")], ["a"])
    with pytest.raises(LearnError):
        minimize_positive(A, MembershipOracle.for_goal(q))


def test_cc_transform_removes_cycle_away_from_dist():
    q = decode_cq("schema: R/2\nq(x) :- R(x,y), R(y,z), R(z,w)\n")
    A = PointedStructure.build(q.schema, [fact("R", "a", "b"), fact("R", "b", "c"), fact("R", "c", "b")], ["a"])
    o = MembershipOracle.for_goal(q)
    assert bad_facts(A, 2)
    B = cc_transform(A, o)
    assert is_c_acyclic(B)
    assert o(B)


def test_cc_transform_needs_binary_schema():
    q = decode_cq("schema: T/3\nq(x) :- T(x,y,z)\n")
    A = canonical_structure(q)
    with pytest.raises(StructureError):
        cc_transform(A, MembershipOracle.for_goal(q))


@pytest.mark.parametrize("goal", [
    decode_cq("schema: P/1, R/2\nq(x) :- R(x,y), P(y)\n"),
    decode_cq("schema: P/1, R/2\nq() :- R(y,z), R(z,w), P(w)\n"),
    decode_cq("schema: P/1, T/3\nq(x) :- T(x,y,z), P(z)\n"),
    decode_cq("schema: R/2\nq(x,x2) :- R(x,y), R(x2,y)\n"),
    four_path_with_marker(),
])
def test_membership_learner_on_named_goals(goal):
    o = MembershipOracle.for_goal(goal)
    rep = learn_membership(o, goal.schema, goal.k)
    assert equivalent(rep.learned, goal)
    assert rep.membership_calls == o.calls
    assert rep.hypothesis_domain_sizes == sorted(set(rep.hypothesis_domain_sizes))


@pytest.mark.parametrize("goal", [four_path_query(), four_path_with_apex()])
def test_memb_equiv_learner_on_named_goals(goal):
    mo, eo = MembershipOracle.for_goal(goal), EquivalenceOracle.for_goal(goal)
    rep = learn_membership_equivalence(mo, eo, goal.schema, goal.k)
    assert equivalent(rep.learned, goal)
    assert rep.equivalence_calls == eo.calls == rep.iterations


def test_memb_equiv_with_padded_counterexamples():
    goal = decode_cq("schema: R/2\nq(x) :- R(x,y), R(y,z), R(z,x)\n")
    mo, eo = MembershipOracle.for_goal(goal), EquivalenceOracle.for_goal(goal, adversarial=True, seed=3)
    assert equivalent(learn_membership_equivalence(mo, eo, goal.schema, 1).learned, goal)


def test_enumeration_finds_smallest_query():
    goal = decode_cq("schema: P/1, R/2\nq(x) :- P(x)\n")
    rep = learn_by_enumeration(MembershipOracle.for_goal(goal), goal.schema, 1, 2)
    assert equivalent(rep.learned, goal)
    assert len(rep.learned.atoms) == 1


def test_enumeration_gives_up_past_size_cap():
    goal = decode_cq("schema: R/2\nq(x) :- R(x,y), R(y,z), R(z,w)\n")
    with pytest.raises(LearnError):
        learn_by_enumeration(MembershipOracle.for_goal(goal), goal.schema, 1, 2)


def test_enumeration_and_membership_agree_on_random_goals():
    schema = Schema.of("P/1", "R/2")
    rng = random.Random(41)
    for _ in range(6):
        goal = random_c_acyclic_query(schema, 1, 2, rng)
        a = learn_membership(MembershipOracle.for_goal(goal), schema, 1).learned
        b = learn_by_enumeration(MembershipOracle.for_goal(goal), schema, 1, 3).learned
        assert equivalent(a, goal) and equivalent(b, goal)


def test_inconsistent_oracle_is_reported():
    schema = Schema.of("P/1")
    with pytest.raises(OracleError):
        learn_membership(MembershipOracle(lambda A: False), schema, 1)
