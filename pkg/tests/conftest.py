import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from answerability.syntax import parse_problem  # noqa: E402
from support import CORPUS  # noqa: E402

CRITERIA = {
    1: "worked examples",
    2: "simplification invariance",
    3: "saturation soundness and completeness",
    4: "linearization equivalence",
    5: "depth-bound completeness",
    6: "FD-route termination",
    7: "oracle consistency",
    8: "cross-route agreement",
}

_outcomes: dict[int, list[bool]] = {}
_CRIT_RE = re.compile(r"test_criterion_(\d+)_")


def pytest_runtest_logreport(report):
    m = _CRIT_RE.search(report.nodeid)
    if m is None or "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(int(m.group(1)), []).append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, label in CRITERIA.items():
        got = _outcomes.get(n)
        if got is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(got) else "FAIL"
        terminalreporter.write_line(f"criterion {n} ({label}): {status}")


@pytest.fixture
def problem():
    return parse_problem


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS
