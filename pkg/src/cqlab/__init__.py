"""Pointed relational structures, homomorphisms, frontiers and exact learning of conjunctive queries."""

from .cq import ConjunctiveQuery, canonical_query, canonical_structure, contains, decode_cq, encode_cq, equivalent, evaluate
from .hom import compute_core, find_homomorphism, has_homomorphism, hom_equivalent
from .structure import Fact, PointedStructure, Schema, decode_structure, encode_structure

__all__ = [
    "ConjunctiveQuery", "Fact", "PointedStructure", "Schema",
    "canonical_query", "canonical_structure", "compute_core", "contains", "decode_cq", "decode_structure",
    "encode_cq", "encode_structure", "equivalent", "evaluate", "find_homomorphism", "has_homomorphism",
    "hom_equivalent",
]
