import os

import numpy as np
import pytest
from hypothesis import settings

from autodess.dataio import Dataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="t.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return _write


@pytest.fixture
def separable():
    rng = np.random.default_rng(3)
    y = np.arange(40) % 2
    X = rng.normal(size=(40, 2)) * 0.5 + 4.0 * y[:, None]
    return Dataset(X, y, 2)


@pytest.fixture
def three_class():
    rng = np.random.default_rng(5)
    y = np.arange(90) % 3
    centers = np.array([[0, 0], [3, 0], [0, 3]])
    X = centers[y] + rng.normal(size=(90, 2)) * 0.8
    return Dataset(X, y, 3)


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_RESULTS, [])

    def record(number, passed, detail, seconds):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail} ({seconds:.1f} s)"
        lines.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
