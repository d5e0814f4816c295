from __future__ import annotations

import time

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_started = time.monotonic()
ACCEPTANCE_LINES: dict[int, str] = {}


def session_elapsed() -> float:
    return time.monotonic() - _started


def pytest_collection_modifyitems(session, config, items):
    # the whole-suite runtime criterion must observe every other test
    last = [it for it in items if it.name == "test_criterion_10_full_suite_runtime"]
    for it in last:
        items.remove(it)
        items.append(it)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
