import pytest

from cqlab.fixtures import pq_point
from cqlab.structure import Schema

CRITERIA: list[str] = []


def record_criterion(number: int, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    verdict = "PASS" if ok and elapsed < limit else "FAIL"
    CRITERIA.append(f"criterion {number:2d}: {verdict}  {detail}  [{elapsed:.1f}s, limit {limit:.0f}s]")


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA):
            terminalreporter.write_line(line)


@pytest.fixture
def pqr():
    return Schema.of("P/1", "Q/1", "R/2")


@pytest.fixture
def apq():
    return pq_point()
