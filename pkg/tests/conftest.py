import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> (title, outcome, detail)
_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, "PASS", ""])
    detail = dict(item.user_properties).get("detail")
    if detail and rep.when == "call":
        entry[2] = "; ".join(filter(None, [entry[2], detail]))
    if rep.skipped and entry[1] == "PASS":
        entry[1] = "SKIP"
        if isinstance(rep.longrepr, tuple):
            entry[2] = rep.longrepr[-1]
    elif rep.failed:
        entry[1] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[n]
        line = f"criterion {n} {status}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
