import re
import sys

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")
_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        _outcomes[k] = "FAIL" if report.outcome == "failed" else report.outcome.upper()
        if report.when == "call" and report.outcome == "passed":
            _outcomes[k] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    module = sys.modules.get("test_acceptance")
    details = getattr(module, "RESULTS", {})
    terminalreporter.section("acceptance criteria")
    for k in sorted(_outcomes):
        detail = details.get(k, (None, "no result recorded"))[1]
        terminalreporter.write_line(f"criterion {k:2d}: {_outcomes[k]:4s}  {detail}")
