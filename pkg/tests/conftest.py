import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# One summary line per acceptance criterion, printed after the run.
_criteria: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.failed:
        name = report.nodeid.split("::")[-1].removeprefix("test_")
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        prev = _criteria.get(name, ("PASS", ""))[0]
        status = "FAIL" if report.failed or prev == "FAIL" else "PASS"
        _criteria[name] = (status, detail or _criteria.get(name, ("", ""))[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split("_")[1])):
        status, detail = _criteria[name]
        terminalreporter.write_line(f"{status}  {name}  {detail}".rstrip())
