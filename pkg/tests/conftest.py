"""Shared pytest plumbing: the acceptance-criterion report.

Acceptance tests record one line per criterion; the terminal summary
prints them together at the end of the run so the pass/fail status of
every criterion is visible in one block regardless of capture mode.
"""

_LINES = []


def record_criterion(number: int, passed: bool, elapsed: float, detail: str) -> None:
    line = (
        f"criterion {number:02d} {'PASS' if passed else 'FAIL'}"
        f" ({elapsed:.1f}s) {detail}"
    )
    _LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES):
        terminalreporter.write_line(line)
