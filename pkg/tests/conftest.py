"""Shared test fixtures and the acceptance-suite terminal summary."""

from __future__ import annotations

import re

from rankdiv.core import BenchmarkRun, RankedList


def make_list(
    model: str,
    task: str,
    items,
    k: int | None = None,
    relevance=None,
) -> RankedList:
    """RankedList from bare item ids; relevance optionally parallel to items."""
    if relevance is None:
        relevance = [None] * len(items)
    return RankedList(
        model=model,
        task=task,
        items=tuple(zip(items, relevance)),
        k=k if k is not None else len(items),
    )


def make_run(lists) -> BenchmarkRun:
    return BenchmarkRun.from_lists(list(lists))


_CRITERION = re.compile(r"test_criterion_(\d+[a-z]?)_?(\w*)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion test."""
    lines: list[tuple[str, str, str]] = []
    for outcome, label in (
        ("passed", "PASS"),
        ("failed", "FAIL"),
        ("xfailed", "XFAIL (documented defect)"),
        ("xpassed", "XPASS (unexpected)"),
        ("skipped", "SKIP"),
    ):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            match = _CRITERION.search(nodeid)
            if not match:
                continue
            slug = match.group(2).replace("_", " ")
            lines.append((match.group(1), slug, label))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, slug, label in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(f"ACCEPTANCE {number} ({slug}): {label}")
