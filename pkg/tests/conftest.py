import pytest
import numpy as np

from ne_moea import RandomSource


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow acceptance tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance test")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng() -> RandomSource:
    return RandomSource(12345)


def brute_force_fronts(objectives: np.ndarray) -> list[set[int]]:
    """Peels fronts by pairwise checks on the remaining members."""
    remaining = set(range(objectives.shape[0]))
    fronts = []
    while remaining:
        front = {
            i
            for i in remaining
            if not any(
                np.all(objectives[j] >= objectives[i]) and np.any(objectives[j] > objectives[i])
                for j in remaining
            )
        }
        fronts.append(front)
        remaining -= front
    return fronts


@pytest.fixture
def log_messages():
    """Messages logged while the test runs, warnings and up."""
    from loguru import logger

    messages: list[str] = []
    handler = logger.add(lambda m: messages.append(m.record["message"]), level="WARNING")
    yield messages
    logger.remove(handler)
