import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_ball_points(rng: np.random.Generator, count: int, n: int, max_radius: float = 0.95) -> np.ndarray:
    """Complex points with radius uniform on (0, max_radius) and random direction."""
    raw = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return raw * rng.uniform(0.0, max_radius, size=(count, 1))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
