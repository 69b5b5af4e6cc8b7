import pytest

CRITERIA = {
    "golden": "exact count matrices and adjacency matrices match the reference values",
    "oracle": "root counts and codec indices match brute-force enumeration",
    "convergence": "band growth rate, column ratio convergence and exact-mode k",
    "scalar": "smallest stored band that keeps k under scalar growth",
    "shift": "shift plan, shift-mode k and storage report",
    "scaling": "storage-scaling cells, exponent widths and growth rate for h=55",
    "streaming": "constant shift storage across N with roundtrips",
    "properties": "invertibility, bijectivity, energy bounds, streaming, variance ordering",
}

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion this test belongs to")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    for key in getattr(report, "criteria", ()):
        _results.setdefault(key, []).append((name, report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = tuple(m.args[0] for m in item.iter_markers("criterion"))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, text in CRITERIA.items():
        runs = _results.get(key)
        if not runs:
            continue
        failed = [name for name, outcome in runs if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        line = f"{status} {key:12s} {text} ({len(runs) - len(failed)}/{len(runs)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)
