import numpy as np
import pytest

from smikm.imagecore import ImageBuf

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gray(arr) -> ImageBuf:
    return ImageBuf(np.asarray(arr, dtype=np.uint8))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
