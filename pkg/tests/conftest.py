import numpy as np
import pytest

from hdgesture import architectures, datagen

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_dataset():
    """13 gestures x 8 positions x 3 reps x 12 windows."""
    return datagen.generate(datagen.GenConfig(windows_per_rep=12, seed=1))


@pytest.fixture(scope="session")
def small_encoded(small_dataset):
    return architectures.encode(small_dataset, seed=0)


@pytest.fixture(scope="session")
def default_dataset():
    return datagen.generate(datagen.GenConfig(seed=0))


@pytest.fixture(scope="session")
def default_encoded(default_dataset):
    return architectures.encode(default_dataset, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
