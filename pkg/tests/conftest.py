"""Prints one PASS/FAIL line per acceptance criterion at the end of a run."""
import re

_results = {}


def _criterion_key(report, props):
    if "criterion" in props:
        return props["criterion"]
    # a test that failed before recording its name still gets a line
    m = re.search(r"test_acceptance\.py::test_(\d+)_(\w+)", report.nodeid)
    if m:
        return f"{m.group(1)} {m.group(2).replace('_', ' ')}"
    return None


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    key = _criterion_key(report, props)
    if key is None:
        return
    if report.when == "call" or report.failed:
        passed = report.passed and not report.failed
        number = key.split()[0]
        previous = _results.get(number)
        if previous is None or previous[0]:
            _results[number] = (passed, key, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results, key=int):
        passed, key, detail = _results[number]
        line = f"{'PASS' if passed else 'FAIL'}  criterion {key}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
