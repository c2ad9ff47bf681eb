import sys

import numpy as np
import pytest

from deconfound.presets import cm
from deconfound.synth import synth_dataset


@pytest.fixture(scope="session")
def cm4():
    return cm(d=4, p=0.95, seed=0)


@pytest.fixture(scope="session")
def small_train(cm4):
    return synth_dataset(cm4, 600, "train")


@pytest.fixture(scope="session")
def small_test(cm4):
    return synth_dataset(cm4, 400, "test")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(lines):
        terminalreporter.write_line(lines[k])
