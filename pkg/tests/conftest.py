import time

import pytest

import support

_START = []
SUITE_BUDGET_S = 60.0


def pytest_sessionstart(session):
    _START.append(time.perf_counter())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = support.ACCEPTANCE
    if not results:
        return
    elapsed = time.perf_counter() - _START[0]
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        if n == 8:
            fast = elapsed < SUITE_BUDGET_S
            detail = f"{detail}; suite runtime {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
            ok = ok and fast
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_sessionfinish(session, exitstatus):
    if 8 in support.ACCEPTANCE and time.perf_counter() - _START[0] >= SUITE_BUDGET_S:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED
