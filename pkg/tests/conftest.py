from pathlib import Path

import numpy as np
import pytest

from shapfair.data import Dataset, SyntheticConfig, generate_synthetic

ADULT_DIR = Path(__file__).resolve().parents[1] / "data" / "adult"

_ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def adult_dir():
    if not (ADULT_DIR / "adult.data").is_file():
        pytest.skip("UCI Adult files not present under data/adult")
    return ADULT_DIR


@pytest.fixture(scope="session")
def small_synth():
    return generate_synthetic(SyntheticConfig(n=3000, seed=11))


def random_dataset(rng: np.random.Generator, n: int, m: int, ties: bool = False) -> Dataset:
    X = rng.standard_normal((n, m))
    if ties:
        X = np.round(X, 1)
    z = rng.integers(0, 2, n)
    z[:2] = [0, 1]
    y = (rng.random(n) < 1 / (1 + np.exp(-(X[:, 0] + z - 0.5)))).astype(int)
    y[:4] = [0, 1, 1, 1]
    z[2:4] = [0, 1]
    return Dataset(X, z, y, tuple(f"x{i}" for i in range(m)))
