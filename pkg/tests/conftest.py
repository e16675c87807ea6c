import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in CRITERIA:
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    class Recorder:
        def __init__(self):
            self.label = None
            self.details = []

        def __call__(self, label):
            self.label = label
            return self

        def note(self, text):
            self.details.append(text)

    rec = Recorder()
    yield rec
    if rec.label is None:
        return
    failed = getattr(request.node, "rep_call", None)
    ok = failed is not None and failed.passed
    detail = f" ({'; '.join(rec.details)})" if rec.details else ""
    line = f"[{'PASS' if ok else 'FAIL'}] {rec.label}{detail}"
    CRITERIA.append(line)
    print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
