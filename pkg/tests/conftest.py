from __future__ import annotations

import re

import numpy as np
import pytest

from tugdpp.grid import DomainSpec
from tugdpp.solver import DppProblem, solve

ACCEPTANCE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion (collected from the run)."""
    seen = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = ACCEPTANCE.search(getattr(rep, "nodeid", ""))
            if not m or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            key = int(m.group(1))
            verdict = "PASS" if outcome == "passed" else "FAIL"
            if seen.get(key, ("", "PASS"))[1] == "FAIL":
                continue
            seen[key] = (m.group(2).replace("_", " "), verdict)
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(seen):
        name, verdict = seen[key]
        terminalreporter.write_line(f"criterion {key} ({name}): {verdict}")


@pytest.fixture(scope="session")
def quad_problem_02():
    """Quadratic data on the unit disc at eps = 0.2, p = 1.5 (policy solve)."""
    p = 1.5
    return DppProblem(DomainSpec.ball(1.0, 0.2), p, f=-p / (2 + p),
                      g=lambda x: np.einsum("ij,ij->i", x, x), method="policy")


@pytest.fixture(scope="session")
def quad_report_02(quad_problem_02):
    return solve(quad_problem_02)
