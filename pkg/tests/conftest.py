import numpy as np
import pytest

import fibsh
from fibsh.cache import cached_analytic_weights
from fibsh.experiments import fibonacci_points_for_bandwidth


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Session-wide weight cache so the expensive solves happen once."""
    return str(tmp_path_factory.mktemp("weight-cache"))


@pytest.fixture(autouse=True)
def _isolate_user_cache(monkeypatch, tmp_path):
    monkeypatch.setenv("FIBSH_CACHE_DIR", str(tmp_path / "user-cache"))


def _fib_pair(b, cache_dir):
    grid = fibsh.gen_fibonacci(fibonacci_points_for_bandwidth(b))
    return grid, cached_analytic_weights(grid, b, directory=cache_dir)


@pytest.fixture(scope="session")
def fib8(tmp_path_factory):
    return _fib_pair(8, str(tmp_path_factory.mktemp("c8")))


@pytest.fixture(scope="session")
def fib16(tmp_path_factory):
    return _fib_pair(16, str(tmp_path_factory.mktemp("c16")))


@pytest.fixture(scope="session")
def fib32(cache_dir):
    return _fib_pair(32, cache_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
