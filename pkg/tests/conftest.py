import json
from pathlib import Path

import numpy as np
import pytest

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture
def oracles():
    return ORACLES


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def within_se(value, target, se, k=4.0):
    return abs(value - target) <= k * se


# one line per acceptance criterion, printed after the run
_CRITERIA = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA.setdefault(number, []).append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        for line in _CRITERIA[n]:
            terminalreporter.write_line(line)
