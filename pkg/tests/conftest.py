import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[props["criterion"]] = (report.outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        outcome, detail = _CRITERIA[k]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status}  {detail}")
