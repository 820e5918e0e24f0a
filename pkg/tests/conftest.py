from pathlib import Path

import numpy as np
import pytest

MODELS = Path(__file__).resolve().parents[1] / "demos" / "models"

RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
PD = np.array([[3.0, 0.0], [5.0, 1.0]])
HAWK_DOVE = np.array([[-1.0, 4.0], [0.0, 2.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def models():
    return MODELS


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" in report.nodeid:
        note = getattr(report, "wasxfail", "")
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, note))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, note in _acceptance:
        mark = "PASS" if outcome == "passed" and not note else "FAIL"
        suffix = f"  (known: {note})" if note else ""
        terminalreporter.write_line(f"{mark}  {name}{suffix}")
