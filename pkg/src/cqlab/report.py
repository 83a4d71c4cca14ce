"""Learner cost sweep: membership calls against goal size, as CSV and a PNG plot."""

from __future__ import annotations

import csv
import random
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from .cq import canonical_structure, equivalent
from .generate import random_c_acyclic_query
from .learn import learn_membership, learn_membership_equivalence
from .oracle import EquivalenceOracle, MembershipOracle
from .structure import Schema

DEFAULT_SCHEMA = "P/1, R/2, S/2"


@dataclass
class ReportRow:
    seed: int
    mode: str
    goal: str
    atoms: int
    domain: int
    membership_calls: int
    equivalence_calls: int
    iterations: int
    wall_time_ms: int
    equivalent: bool


def sweep(
    n_goals: int,
    *,
    seed: int = 0,
    schema: Schema | None = None,
    max_atoms: int = 5,
    max_k: int = 2,
    modes: tuple[str, ...] = ("membership", "memb-equiv"),
) -> list[ReportRow]:
    schema = schema or Schema.parse(DEFAULT_SCHEMA)
    rows = []
    for i in range(n_goals):
        rng = random.Random(seed * 100_003 + i)
        goal = random_c_acyclic_query(schema, rng.randint(0, max_k), max_atoms, rng)
        size = len(canonical_structure(goal).domain)
        for mode in modes:
            mo = MembershipOracle.for_goal(goal)
            start = time.perf_counter()
            if mode == "membership":
                rep = learn_membership(mo, schema, goal.k)
            else:
                rep = learn_membership_equivalence(mo, EquivalenceOracle.for_goal(goal), schema, goal.k)
            ms = round((time.perf_counter() - start) * 1000)
            rows.append(ReportRow(i, mode, str(goal), len(goal.atoms), size, rep.membership_calls,
                                  rep.equivalence_calls, rep.iterations, ms, equivalent(rep.learned, goal)))
    return rows


def write_csv(path, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(ReportRow.__dataclass_fields__))
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r))


def plot(path, rows: list[ReportRow]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, marker in (("membership", "o"), ("memb-equiv", "s")):
        pts = [(r.atoms, r.membership_calls) for r in rows if r.mode == mode]
        if pts:
            xs, ys = zip(*pts)
            ax.scatter(xs, ys, marker=marker, alpha=0.6, label=mode)
    ax.set_xlabel("goal atoms")
    ax.set_ylabel("membership calls")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def write_report(directory, rows: list[ReportRow]) -> tuple[Path, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    csv_path, png_path = d / "learner_calls.csv", d / "learner_calls.png"
    write_csv(csv_path, rows)
    plot(png_path, rows)
    return csv_path, png_path
