import pytest

from posefusion.config import default_config
from posefusion.harness import run_simulation


@pytest.fixture(scope="session")
def bench_cfg():
    """The shipped benchmark scenario."""
    return default_config()


@pytest.fixture(scope="session")
def short_record(bench_cfg):
    """A one-second benchmark run, shared by tests that only need a record."""
    return run_simulation(bench_cfg.with_overrides(duration=1.0))
