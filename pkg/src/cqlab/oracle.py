"""Membership and equivalence oracles: simulated ones and an out-of-process protocol.

Protocol (newline-delimited, learner side writes first)::

    BEGIN MEMBER            ->  1 | 0
    <structure file body>
    END

    BEGIN EQUIV             ->  YES
    <query text>                | BEGIN STRUCTURE
    END                           <structure file body>
                                  END

Running ``python -m cqlab.oracle --goal goal.cq`` serves a simulated oracle
for a goal query over this protocol on stdin/stdout.
"""

from __future__ import annotations

import argparse
import random
import shlex
import subprocess
import sys
from typing import Callable, Iterable, TextIO

from .cq import ConjunctiveQuery, canonical_structure, decode_cq, encode_cq, satisfies
from .hom import has_homomorphism
from .structure import Fact, PointedStructure, StructureError, decode_structure, encode_structure


class OracleError(RuntimeError):
    """The oracle broke the protocol or contradicted itself."""


class MembershipOracle:
    """Callable ``structure -> bool`` with an exact call counter."""

    def __init__(self, answer: Callable[[PointedStructure], bool]):
        self._answer = answer
        self.calls = 0

    def __call__(self, A: PointedStructure) -> bool:
        self.calls += 1
        return bool(self._answer(A))

    @classmethod
    def for_goal(cls, goal: ConjunctiveQuery) -> "MembershipOracle":
        return cls(lambda A: satisfies(goal, A))


class EquivalenceOracle:
    """Callable ``query -> None | counterexample`` with an exact call counter.

    ``None`` means the hypothesis is equivalent to the goal.
    """

    def __init__(self, answer: Callable[[ConjunctiveQuery], PointedStructure | None]):
        self._answer = answer
        self.calls = 0

    def __call__(self, hypothesis: ConjunctiveQuery) -> PointedStructure | None:
        self.calls += 1
        return self._answer(hypothesis)

    @classmethod
    def for_goal(
        cls, goal: ConjunctiveQuery, *, adversarial: bool = False, seed: int = 0
    ) -> "EquivalenceOracle":
        G = canonical_structure(goal)
        rng = random.Random(seed)

        def answer(hyp: ConjunctiveQuery) -> PointedStructure | None:
            H = canonical_structure(hyp)
            if not has_homomorphism(H, G):
                # goal holds on its own canonical structure, the hypothesis does not
                return pad_structure(G, rng) if adversarial else G
            if has_homomorphism(G, H):
                return None
            return H

        return cls(answer)


def pad_structure(A: PointedStructure, rng: random.Random, extra: int | None = None) -> PointedStructure:
    """Add facts that keep ``A`` homomorphically equivalent to itself.

    Each new fact copies an existing one with some non-distinguished
    arguments replaced by fresh elements; mapping every fresh element back
    to the one it replaced retracts the result onto ``A``.
    """
    facts = list(A.sorted_facts)
    if not facts:
        return A
    if extra is None:
        extra = rng.randint(1, max(1, len(facts)))
    out = set(A.facts)
    domain = set(A.domain)
    counter = 0
    for _ in range(extra):
        f = rng.choice(facts)
        args = []
        for x in f.args:
            if x not in A.dist_set and rng.random() < 0.6:
                counter += 1
                name = f"pad{counter}"
                while name in domain:
                    counter += 1
                    name = f"pad{counter}"
                domain.add(name)
                args.append(name)
            else:
                args.append(x)
        out.add(Fact(f.relation, tuple(args)))
    return PointedStructure(A.schema, frozenset(domain), frozenset(out), A.dist)


# out-of-process oracles


def _read_framed(lines: Iterable[str], first: str) -> str:
    """Collect lines up to ``END``; ``first`` is the already-read opening line."""
    body = []
    for line in lines:
        if line.strip() == "END":
            return "".join(body)
        body.append(line)
    raise OracleError(f"unterminated block after {first.strip()!r}")


class ExternalOracle:
    """Talks to an oracle process over the line protocol.

    The same process answers both kinds of questions; use :attr:`membership`
    and :attr:`equivalence` as the two oracles.
    """

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1)
        self.membership = MembershipOracle(self._member)
        self.equivalence = EquivalenceOracle(self._equiv)

    def _send(self, header: str, body: str) -> None:
        if not body.endswith("\n"):
            body += "\n"
        try:
            self.proc.stdin.write(f"{header}\n{body}END\n")
            self.proc.stdin.flush()
        except BrokenPipeError:
            raise OracleError("oracle process closed its input") from None

    def _readline(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise OracleError("oracle process ended the conversation")
        return line

    def _member(self, A: PointedStructure) -> bool:
        self._send("BEGIN MEMBER", encode_structure(A))
        reply = self._readline().strip()
        if reply not in ("0", "1"):
            raise OracleError(f"expected 1 or 0 from membership oracle, got {reply!r}")
        return reply == "1"

    def _equiv(self, q: ConjunctiveQuery) -> PointedStructure | None:
        self._send("BEGIN EQUIV", encode_cq(q))
        reply = self._readline()
        if reply.strip() == "YES":
            return None
        if reply.strip() != "BEGIN STRUCTURE":
            raise OracleError(f"expected YES or a structure from equivalence oracle, got {reply.strip()!r}")
        text = _read_framed(iter(self._readline, None), reply)
        try:
            return decode_structure(text, q.schema)
        except StructureError as exc:
            raise OracleError(f"bad counterexample from oracle: {exc}") from None

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(goal: ConjunctiveQuery, inp: TextIO, out: TextIO, *, adversarial: bool = False, seed: int = 0) -> None:
    """Answer protocol requests for ``goal`` until the input ends."""
    member = MembershipOracle.for_goal(goal)
    equiv = EquivalenceOracle.for_goal(goal, adversarial=adversarial, seed=seed)
    lines = iter(inp.readline, "")
    for line in lines:
        head = line.strip()
        if not head:
            continue
        if head == "BEGIN MEMBER":
            A = decode_structure(_read_framed(lines, line), goal.schema)
            out.write("1\n" if member(A) else "0\n")
        elif head == "BEGIN EQUIV":
            q = decode_cq(_read_framed(lines, line), goal.schema)
            C = equiv(q)
            if C is None:
                out.write("YES\n")
            else:
                out.write("BEGIN STRUCTURE\n" + encode_structure(C) + "END\n")
        else:
            raise OracleError(f"unexpected request line {head!r}")
        out.flush()


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="python -m cqlab.oracle", description="Serve a simulated oracle over stdin/stdout.")
    p.add_argument("--goal", required=True, help="goal query file")
    p.add_argument("--adversarial", action="store_true", help="pad counterexamples with redundant facts")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    with open(args.goal) as fh:
        goal = decode_cq(fh.read())
    serve(goal, sys.stdin, sys.stdout, adversarial=args.adversarial, seed=args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
