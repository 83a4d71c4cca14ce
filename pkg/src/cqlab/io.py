"""Files and directories for structures, queries, frontiers and example sets."""

from __future__ import annotations

import json
from pathlib import Path

from .characterize import ExampleSet
from .cq import ConjunctiveQuery, decode_cq, encode_cq
from .frontier import Frontier
from .structure import PointedStructure, Schema, decode_structure, encode_structure


def read_structure(path, schema: Schema | None = None) -> PointedStructure:
    return decode_structure(Path(path).read_text(), schema)


def write_structure(path, A: PointedStructure) -> None:
    Path(path).write_text(encode_structure(A))


def read_query(path, schema: Schema | None = None) -> ConjunctiveQuery:
    return decode_cq(Path(path).read_text(), schema)


def write_query(path, q: ConjunctiveQuery) -> None:
    Path(path).write_text(encode_cq(q))


def _dump(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_frontier(directory, F: Frontier, *, verification: str = "unverified") -> Path:
    """Write ``target.struct``, ``member_NNN.struct`` files and ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for old in d.glob("member_*.struct"):
        old.unlink()
    write_structure(d / "target.struct", F.target)
    names = []
    for i, M in enumerate(F.members):
        name = f"member_{i:03d}.struct"
        write_structure(d / name, M)
        names.append(name)
    _dump(d / "manifest.json", {
        "target": "target.struct",
        "members": names,
        "scope": F.scope,
        "method": F.method,
        "verification": verification,
    })
    return d


def read_frontier(directory) -> tuple[PointedStructure, list[PointedStructure], dict]:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    A = read_structure(d / manifest["target"])
    members = [read_structure(d / name, A.schema) for name in manifest["members"]]
    return A, members, manifest


def write_examples(directory, ex: ExampleSet) -> Path:
    """Write ``positive/``, ``negative/``, ``query.cq`` and ``manifest.json``."""
    d = Path(directory)
    for sub in ("positive", "negative"):
        (d / sub).mkdir(parents=True, exist_ok=True)
        for old in (d / sub).glob("*.struct"):
            old.unlink()
    pos = []
    for i, P in enumerate(ex.positives):
        name = f"positive/{i:03d}.struct"
        write_structure(d / name, P)
        pos.append(name)
    neg = []
    for i, N in enumerate(ex.negatives):
        name = f"negative/{i:03d}.struct"
        write_structure(d / name, N)
        neg.append(name)
    write_query(d / "query.cq", ex.query)
    _dump(d / "manifest.json", {"query": "query.cq", "positives": pos, "negatives": neg})
    return d


def read_examples(directory) -> ExampleSet:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    q = read_query(d / manifest["query"])
    pos = [read_structure(d / name, q.schema) for name in manifest["positives"]]
    neg = [read_structure(d / name, q.schema) for name in manifest["negatives"]]
    return ExampleSet(tuple(pos), tuple(neg), q)
