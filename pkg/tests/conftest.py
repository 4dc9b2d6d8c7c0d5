from pathlib import Path

import pytest

from tagtrace.ingest import parse_trace
from tagtrace.model import build_community

DATA = Path(__file__).parent / "data"
FIXTURE_TRACE = DATA / "urn_fixture.tsv"

# criterion number -> (description, passed)
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool]] = {}


@pytest.fixture(scope="session")
def urn_community():
    with open(FIXTURE_TRACE, "rb") as f:
        records = parse_trace(f)
    return build_community(r.to_assignment() for r in records)


@pytest.fixture
def tiny():
    """Three assignments, two users: u1 tags i1 twice, u2 tags i2."""
    return build_community([("u1", "t1", "i1", 100), ("u1", "t2", "i1", 101), ("u2", "t1", "i2", 102)])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        desc, ok = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {desc}")
