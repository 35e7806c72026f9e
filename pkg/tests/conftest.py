"""Prints one PASS/FAIL line per acceptance criterion after the run."""

from collections import OrderedDict

_results: "OrderedDict[str, list]" = OrderedDict()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _results.setdefault(value, []).append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_results, key=int):
        checks = _results[crit]
        ok = all(passed for _, passed in checks)
        failed = [name for name, passed in checks if not passed]
        suffix = f"  (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}{suffix}")
