import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
_outcomes: dict[int, tuple[str, float, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    number = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = ""
        if report.failed:
            detail = str(report.longrepr.reprcrash.message).splitlines()[0] if hasattr(
                report.longrepr, "reprcrash") else str(report.longrepr).splitlines()[-1]
        _outcomes[number] = ("PASS" if report.passed else "FAIL", report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, seconds, detail = _outcomes[number]
        line = f"criterion {number:2d} {status}  ({seconds:6.2f} s)  {CRITERIA[number]}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
