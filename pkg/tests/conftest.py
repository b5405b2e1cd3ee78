import numpy as np
import pytest

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    num, title = mark.args
    entry = _criteria.setdefault(num, {"title": title, "ok": True, "tests": 0})
    entry["tests"] += 1
    entry["ok"] &= rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {e['title']}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)
