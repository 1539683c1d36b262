import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    k = marker.args[0]
    prev = _RESULTS.get(k, (True, []))
    ok = prev[0] and report.passed
    _RESULTS[k] = (ok, prev[1] + ([] if report.passed else [item.name]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        ok, failed = _RESULTS[k]
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" ({', '.join(failed)})"
        terminalreporter.write_line(line)
