"""``cqlab`` command line.

Exit codes: 0 success or positive answer, 1 negative answer, 2 usage or
input error, 3 refusal (size cap, unsupported target, oracle failure).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import io
from .algebra import SizeCapExceeded, direct_product
from .characterize import characterizing_examples
from .cq import QueryError, contains, encode_cq, equivalent, evaluate
from .frontier import FrontierError, frontier_c_acyclic, frontier_tree
from .hom import HomCapExceeded, compute_core, find_homomorphism
from .learn import LearnError, learn_by_enumeration, learn_membership, learn_membership_equivalence
from .oracle import EquivalenceOracle, ExternalOracle, MembershipOracle, OracleError
from .structure import Schema, StructureError, StructureParseError, classify, encode_structure, is_safe
from .verify import CLASS_FILTERS, verify_frontier

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_REFUSED = 0, 1, 2, 3


@dataclass
class RunStats:
    command: str
    membership_queries: int = 0
    equivalence_queries: int = 0
    iterations: int = 0
    wall_time_ms: int = 0
    verdict: str = ""


class CliError(Exception):
    def __init__(self, code: int, kind: str, reason: str):
        super().__init__(reason)
        self.code, self.kind, self.reason = code, kind, reason


class _Run:
    """Per-invocation output channel that honours ``--json``."""

    def __init__(self, args):
        self.json = args.json
        self.stats = RunStats(args.command)

    def emit(self, text: str, data) -> None:
        if self.json:
            print(json.dumps(data, sort_keys=True))
        else:
            sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")


def _structure(path: str, schema: Schema | None = None):
    return io.read_structure(path, schema)


def _save_or_print(run: _Run, A, out: str | None, key: str) -> None:
    text = encode_structure(A)
    if out:
        Path(out).write_text(text)
        run.emit(f"wrote {out}", {key: out})
    else:
        run.emit(text, {key: text})


# subcommands


def cmd_hom(args, run: _Run) -> int:
    A = _structure(args.source)
    B = _structure(args.target, A.schema)
    h = find_homomorphism(A, B, method=args.method)
    run.stats.verdict = "hom" if h is not None else "no-hom"
    if h is None:
        run.emit("no homomorphism", {"homomorphism": None})
        return EXIT_NO
    run.emit("\n".join(f"{x} -> {h[x]}" for x in sorted(h)), {"homomorphism": dict(sorted(h.items()))})
    return EXIT_OK


def cmd_core(args, run: _Run) -> int:
    res = compute_core(_structure(args.structure))
    run.stats.verdict = f"core of {len(res.core.domain)} elements"
    _save_or_print(run, res.core.compact_names() if args.rename else res.core, args.output, "core")
    return EXIT_OK


def cmd_classify(args, run: _Run) -> int:
    flags = asdict(classify(_structure(args.structure)))
    run.stats.verdict = ",".join(k for k, v in flags.items() if v) or "none"
    run.emit("\n".join(f"{k}: {str(v).lower()}" for k, v in flags.items()), flags)
    return EXIT_OK


def cmd_product(args, run: _Run) -> int:
    A = _structure(args.left)
    B = _structure(args.right, A.schema)
    P = direct_product(A, B)
    run.stats.verdict = f"{len(P.domain)} elements"
    _save_or_print(run, P, args.output, "product")
    return EXIT_OK


def cmd_frontier(args, run: _Run) -> int:
    A = _structure(args.structure)
    if args.method == "tree":
        F = frontier_tree(A)
    else:
        F = frontier_c_acyclic(A, args.method, cap=args.cap)
        if args.scope == "safe":
            F = type(F)(F.target, tuple(M for M in F.members if is_safe(M)), "safe-structures", F.method)
    status = "unverified"
    if args.verify:
        status = "verified" if verify_frontier(A, F, "structural") else "rejected"
    io.write_frontier(args.output, F, verification=status)
    run.stats.verdict = f"{len(F.members)} members ({status})"
    run.emit(f"{len(F.members)} members written to {args.output}",
             {"members": len(F.members), "directory": args.output, "scope": F.scope, "verification": status})
    return EXIT_OK


def cmd_verify_frontier(args, run: _Run) -> int:
    A, members, manifest = io.read_frontier(args.directory)
    class_filter = args.class_filter
    if class_filter is None:
        class_filter = {"safe-structures": "safe", "connected-acyclic-k1": "connected-acyclic-k1"}.get(
            manifest.get("scope"), "all")
    v = verify_frontier(A, members, args.mode, max_elems=args.max_elems, class_filter=class_filter)
    run.stats.verdict = "accepted" if v.accepted else "rejected"
    lines = [run.stats.verdict, *v.reasons]
    for i, W in enumerate(v.witnesses):
        lines.append(f"witness {i}:")
        lines.append(encode_structure(W).rstrip())
    run.emit("\n".join(lines), {
        "accepted": v.accepted, "mode": v.mode, "checked": v.checked, "reasons": v.reasons,
        "witnesses": [encode_structure(W) for W in v.witnesses]})
    return EXIT_OK if v.accepted else EXIT_NO


def cmd_characterize(args, run: _Run) -> int:
    q = io.read_query(args.query)
    ex = characterizing_examples(q, prune_unsafe=args.prune_unsafe, method=args.method, via_tree=args.tree)
    io.write_examples(args.output, ex)
    run.stats.verdict = f"{len(ex.positives)} positive, {len(ex.negatives)} negative"
    run.emit(f"{run.stats.verdict} examples written to {args.output}",
             {"positives": len(ex.positives), "negatives": len(ex.negatives), "directory": args.output})
    return EXIT_OK


def _learn_schema(args, goal) -> tuple[Schema, int]:
    schema = Schema.parse(args.schema) if args.schema else (goal.schema if goal else None)
    if schema is None:
        raise CliError(EXIT_USAGE, "usage", "--schema is required with --oracle-cmd and no --goal")
    k = args.k if args.k is not None else (goal.k if goal else None)
    if k is None:
        raise CliError(EXIT_USAGE, "usage", "-k is required with --oracle-cmd and no --goal")
    return schema, k


def cmd_learn(args, run: _Run) -> int:
    if not args.goal and not args.oracle_cmd:
        raise CliError(EXIT_USAGE, "usage", "give --goal or --oracle-cmd")
    goal = io.read_query(args.goal, Schema.parse(args.schema) if args.schema else None) if args.goal else None
    schema, k = _learn_schema(args, goal)
    external = ExternalOracle(args.oracle_cmd) if args.oracle_cmd else None
    mo = eo = None
    try:
        if external:
            mo, eo = external.membership, external.equivalence
        else:
            mo = MembershipOracle.for_goal(goal)
            eo = EquivalenceOracle.for_goal(goal, adversarial=args.adversarial, seed=args.seed)
        if args.mode == "membership":
            rep = learn_membership(mo, schema, k, method=args.method, max_iterations=args.max_iterations)
        elif args.mode == "memb-equiv":
            rep = learn_membership_equivalence(mo, eo, schema, k, max_iterations=args.max_iterations)
        else:
            rep = learn_by_enumeration(mo, schema, k, args.size_cap)
    finally:
        run.stats.membership_queries = mo.calls if mo else 0
        run.stats.equivalence_queries = eo.calls if eo else 0
        if external:
            external.close()
    run.stats.iterations = rep.iterations
    verdict = "learned"
    if goal is not None:
        verdict = "equivalent" if equivalent(rep.learned, goal) else "not-equivalent"
    run.stats.verdict = verdict
    Path(args.output).write_text(encode_cq(rep.learned))
    run.emit(f"{rep.learned}\n{verdict}; wrote {args.output}", {
        "learned": str(rep.learned), "verdict": verdict, "output": args.output,
        "hypothesis_domain_sizes": rep.hypothesis_domain_sizes})
    return EXIT_OK if verdict != "not-equivalent" else EXIT_NO


def cmd_eval(args, run: _Run) -> int:
    q = io.read_query(args.query)
    A = _structure(args.structure, q.schema)
    answers = sorted(evaluate(q, A))
    run.stats.verdict = f"{len(answers)} answers"
    run.emit("\n".join("(" + ", ".join(t) + ")" for t in answers), {"answers": [list(t) for t in answers]})
    return EXIT_OK if answers else EXIT_NO


def cmd_contains(args, run: _Run) -> int:
    q1 = io.read_query(args.left)
    q2 = io.read_query(args.right, q1.schema)
    yes = contains(q1, q2)
    run.stats.verdict = "contained" if yes else "not-contained"
    run.emit(run.stats.verdict, {"contained": yes})
    return EXIT_OK if yes else EXIT_NO


def cmd_report(args, run: _Run) -> int:
    from .report import sweep, write_report

    schema = Schema.parse(args.schema) if args.schema else None
    rows = sweep(args.goals, seed=args.seed, schema=schema, max_atoms=args.max_atoms)
    csv_path, png_path = write_report(args.output, rows)
    run.stats.membership_queries = sum(r.membership_calls for r in rows)
    run.stats.equivalence_queries = sum(r.equivalence_calls for r in rows)
    run.stats.iterations = sum(r.iterations for r in rows)
    ok = all(r.equivalent for r in rows)
    run.stats.verdict = "all-equivalent" if ok else "mismatch"
    run.emit(f"wrote {csv_path} and {png_path}", {"csv": str(csv_path), "png": str(png_path), "rows": len(rows)})
    return EXIT_OK if ok else EXIT_NO


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output and errors")
    common.add_argument("--stats", metavar="FILE", help="write run statistics as JSON")

    p = argparse.ArgumentParser(prog="cqlab", description="Homomorphisms, frontiers and query learning.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("hom", parents=[common], help="find a homomorphism between two structures")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--method", choices=["auto", "dp", "backtrack"], default="auto")
    s.set_defaults(func=cmd_hom)

    s = sub.add_parser("core", parents=[common], help="compute the core of a structure")
    s.add_argument("structure")
    s.add_argument("-o", "--output")
    s.add_argument("--rename", action="store_true", help="rename elements to short names")
    s.set_defaults(func=cmd_core)

    s = sub.add_parser("classify", parents=[common], help="report structural flags")
    s.add_argument("structure")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("product", parents=[common], help="direct product of two structures")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_product)

    s = sub.add_parser("frontier", parents=[common], help="build a frontier into a directory")
    s.add_argument("structure")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--method", choices=["duality-product", "paper-poly", "grafted", "tree"],
                   default="duality-product")
    s.add_argument("--scope", choices=["all", "safe"], default="all",
                   help="'safe' keeps only members with no fact-free distinguished element")
    s.add_argument("--verify", action="store_true", help="run the structural check and record it")
    s.add_argument("--cap", type=int, default=10**6, help="element cap for intermediate powers")
    s.set_defaults(func=cmd_frontier)

    s = sub.add_parser("verify-frontier", parents=[common], help="check a frontier directory")
    s.add_argument("directory")
    s.add_argument("--mode", choices=["structural", "exhaustive"], default="structural")
    s.add_argument("--max-elems", type=int, default=3)
    s.add_argument("--class", dest="class_filter", choices=CLASS_FILTERS,
                   help="candidate class (default from the manifest scope)")
    s.set_defaults(func=cmd_verify_frontier)

    s = sub.add_parser("characterize", parents=[common], help="write characterizing examples of a query")
    s.add_argument("query")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--method", choices=["duality-product", "grafted"], default="duality-product")
    s.add_argument("--prune-unsafe", action="store_true")
    s.add_argument("--tree", action="store_true", help="use the tree frontier (unary acyclic connected queries)")
    s.set_defaults(func=cmd_characterize)

    s = sub.add_parser("learn", parents=[common], help="learn a query from oracles")
    s.add_argument("--goal", help="goal query answered by simulated oracles")
    s.add_argument("--oracle-cmd", help="command of an external oracle process")
    s.add_argument("--mode", choices=["membership", "memb-equiv", "enumeration"], default="membership")
    s.add_argument("--schema", help="schema such as 'P/1, R/2' (default: the goal's)")
    s.add_argument("-k", type=int, help="number of head variables (default: the goal's)")
    s.add_argument("--method", choices=["grafted", "duality-product"], default="grafted",
                   help="frontier construction used by the membership learner")
    s.add_argument("--adversarial", action="store_true", help="pad simulated counterexamples")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iterations", type=int, default=1000)
    s.add_argument("--size-cap", type=int, default=6, help="atom cap for the enumeration learner")
    s.add_argument("-o", "--output", default="learned.cq")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("eval", parents=[common], help="evaluate a query on a structure")
    s.add_argument("query")
    s.add_argument("structure")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("contains", parents=[common], help="exit 0 iff the first query is contained in the second")
    s.add_argument("left")
    s.add_argument("right")
    s.set_defaults(func=cmd_contains)

    s = sub.add_parser("report", parents=[common], help="learner cost sweep as CSV and PNG")
    s.add_argument("-o", "--output", default="report")
    s.add_argument("--goals", type=int, default=20)
    s.add_argument("--max-atoms", type=int, default=5)
    s.add_argument("--schema")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_report)
    return p


_REFUSALS = (SizeCapExceeded, HomCapExceeded, FrontierError, LearnError, OracleError)


def _fail(run: _Run | None, json_mode: bool, err: CliError) -> int:
    if json_mode:
        sys.stderr.write(json.dumps({"error": err.kind, "reason": err.reason, "exit_code": err.code}) + "\n")
    else:
        sys.stderr.write(f"cqlab: {err.kind}: {err.reason}\n")
    if run is not None:
        run.stats.verdict = f"error: {err.kind}"
    return err.code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    run = _Run(args)
    start = time.perf_counter()
    try:
        code = args.func(args, run)
    except CliError as exc:
        code = _fail(run, args.json, exc)
    except StructureParseError as exc:
        code = _fail(run, args.json, CliError(EXIT_USAGE, "parse", str(exc)))
    except _REFUSALS as exc:
        code = _fail(run, args.json, CliError(EXIT_REFUSED, type(exc).__name__, str(exc)))
    except (StructureError, QueryError, OSError, ValueError) as exc:
        code = _fail(run, args.json, CliError(EXIT_USAGE, type(exc).__name__, str(exc)))
    run.stats.wall_time_ms = round((time.perf_counter() - start) * 1000)
    if args.stats:
        Path(args.stats).write_text(json.dumps(asdict(run.stats), indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
