"""Frontier verification: a certificate check and a brute-force check."""

from __future__ import annotations

from dataclasses import dataclass, field

from .exhaustive import candidates_below, rooted_trees
from .frontier import Frontier, FrontierError, frontier_c_acyclic, maximal_elements
from .hom import compute_core, has_homomorphism
from .structure import PointedStructure, is_c_acyclic

CLASS_FILTERS = ("all", "safe", "connected-acyclic-k1")


@dataclass
class Verdict:
    accepted: bool
    mode: str
    reasons: list[str] = field(default_factory=list)
    witnesses: list[PointedStructure] = field(default_factory=list)
    checked: int = 0

    def __bool__(self) -> bool:
        return self.accepted


def _members(F) -> list[PointedStructure]:
    return list(F.members) if isinstance(F, Frontier) else list(F)


def verify_frontier(
    A: PointedStructure,
    F,
    mode: str = "structural",
    *,
    max_elems: int = 3,
    class_filter: str = "all",
) -> Verdict:
    members = _members(F)
    if mode == "structural":
        return _verify_structural(A, members)
    if mode == "exhaustive":
        return _verify_exhaustive(A, members, max_elems, class_filter)
    raise ValueError(f"unknown verification mode {mode!r}")


def _verify_structural(A: PointedStructure, members) -> Verdict:
    v = Verdict(True, "structural")
    cr = compute_core(A).core
    if not is_c_acyclic(cr):
        v.accepted = False
        v.reasons.append("core of the target is not c-acyclic; no finite frontier exists")
        return v
    try:
        ref = frontier_c_acyclic(cr).members
    except FrontierError as exc:
        v.accepted = False
        v.reasons.append(str(exc))
        return v
    for i, B in enumerate(members):
        if not any(has_homomorphism(B, R) for R in ref):
            v.accepted = False
            v.reasons.append(f"member {i} maps into no reference member")
    for j, R in enumerate(ref):
        v.checked += 1
        if not any(has_homomorphism(R, B) for B in members):
            v.accepted = False
            v.reasons.append(f"reference member {j} maps into no given member")
            v.witnesses.append(R)
    return v


def _verify_exhaustive(A: PointedStructure, members, max_elems: int, class_filter: str) -> Verdict:
    if class_filter not in CLASS_FILTERS:
        raise ValueError(f"unknown class filter {class_filter!r}")
    v = Verdict(True, "exhaustive")
    for i, B in enumerate(members):
        if not has_homomorphism(B, A):
            v.accepted = False
            v.reasons.append(f"member {i} does not map to the target")
        if has_homomorphism(A, B):
            v.accepted = False
            v.reasons.append(f"target maps to member {i}")
    if class_filter == "connected-acyclic-k1":
        if A.k != 1:
            raise ValueError("connected-acyclic-k1 candidates need a target with one distinguished element")
        pool = (C for C in rooted_trees(A.schema, max_elems)
                if has_homomorphism(C, A) and not has_homomorphism(A, C))
    else:
        pool = candidates_below(A, max_elems, safe_only=(class_filter == "safe"))
    bad = []
    for C in pool:
        v.checked += 1
        if not any(has_homomorphism(C, B) for B in members):
            bad.append(C)
    if bad:
        v.accepted = False
        v.witnesses = [W.compact_names() for W in maximal_elements(bad)]
        v.reasons.append(f"{len(v.witnesses)} structure(s) below the target are not covered")
    return v
