"""Shared fixtures and the acceptance-report hook.

The acceptance tests register one line each through the `acceptance` fixture;
the terminal-summary hook prints the collected lines after the run so the
per-criterion pass/fail verdicts are visible even when everything passes.
"""
from __future__ import annotations

import numpy as np
import pytest

from perfectsample.models import ladder_walk, three_state_walk

_ACCEPTANCE_LINES: list[tuple[int, str]] = []


def register_acceptance_line(number: int, title: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    _ACCEPTANCE_LINES.append((number, f"[{number:02d}] {title}: {status} ({detail})"))


@pytest.fixture
def acceptance():
    """Callable recording one pass/fail line and asserting the verdict."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        register_acceptance_line(number, title, ok, detail)
        assert ok, f"criterion {number:02d} {title}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ladder_half():
    return ladder_walk(0.5)


@pytest.fixture(scope="session")
def ladder_low():
    return ladder_walk(0.3)


@pytest.fixture(scope="session")
def walk3_half():
    return three_state_walk(0.5)


def chisq_pvalue(counts: np.ndarray, probs: np.ndarray) -> float:
    """Chi-square goodness-of-fit p-value for observed counts vs exact probs."""
    from scipy import stats

    counts = np.asarray(counts, dtype=float)
    expected = probs * counts.sum()
    stat = float(((counts - expected) ** 2 / expected).sum())
    return float(stats.chi2.sf(stat, len(counts) - 1))
