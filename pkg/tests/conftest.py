import os
import sys

import numpy as np
import pytest

from segshap.core import synth_bump_dataset
from segshap.model import train_nearest_centroid

HERE = os.path.dirname(os.path.abspath(__file__))
TS_DIR = os.path.join(HERE, "data", "ts")
FAKE = os.path.join(HERE, "fake_classifier.py")


def fake_command(mode="ok"):
    return f"{sys.executable} {FAKE} {mode}"


def step_signal(levels=(0.0, 10.0, -10.0), width=50):
    return np.repeat(np.asarray(levels, dtype=float), width)[None]


@pytest.fixture(scope="session")
def bumps():
    train = synth_bump_dataset(40, 1, 100, 2, 25, 0.1, seed=0)
    test = synth_bump_dataset(20, 1, 100, 2, 25, 0.1, seed=1, role="test")
    return train, test


@pytest.fixture(scope="session")
def small_bumps():
    train = synth_bump_dataset(12, 2, 24, 3, 6, 0.1, seed=5)
    test = synth_bump_dataset(6, 2, 24, 3, 6, 0.1, seed=6, role="test")
    return train, test


@pytest.fixture(scope="session")
def centroid(bumps):
    return train_nearest_centroid(bumps[0])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
