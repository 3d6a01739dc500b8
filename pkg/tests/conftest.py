"""
CUTrend Test Configuration
Shared test fixtures and configuration for the CUTrend test suite.
"""

import sys
import tempfile
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from cutrend.model.epi import Observation, Stratum  # noqa: E402
from cutrend.model.grid import TimeGrid  # noqa: E402
from cutrend.model.priors import EPI_PRIORS  # noqa: E402


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


@pytest.fixture
def grid():
    """Default 1985-2010 grid at half-month steps."""
    return TimeGrid()


@pytest.fixture
def coarse_grid():
    """Three-month steps, for filter and sampler tests that only need speed."""
    return TimeGrid(1985.0, 2010.0, 3.0)


@pytest.fixture
def mid_range_values():
    """Every transmission prior at the midpoint of its range."""
    return {name: 0.5 * (prior.low + prior.high) for name, prior in EPI_PRIORS.items()}


@pytest.fixture
def observations():
    """Four surveys on the reference schedule, with plausible counts."""
    return [
        Observation(2005.0, Stratum.FSW, 110, 425),
        Observation(2007.0, Stratum.FSW, 95, 425),
        Observation(2008.75, Stratum.FSW, 80, 425),
        Observation(2009.0, Stratum.CLIENT, 12, 425),
    ]


@pytest.fixture
def observation_csv(temp_dir):
    """Observation file in the loadable format."""
    path = Path(temp_dir) / "observations.csv"
    path.write_text(
        "# source=test\n"
        "time,stratum,positives,sample_size\n"
        "2007.0,fsw,95,425\n"
        "2005.0,fsw,110,425\n"
        "2009.0,client,12,425\n"
        "2008.75,fsw,80,425\n"
    )
    return str(path)


@pytest.fixture
def small_config_file(temp_dir):
    """YAML configuration with chain lengths small enough for tests."""
    path = Path(temp_dir) / "config.yaml"
    path.write_text(
        "seed: 11\n"
        "inference:\n"
        "  iterations: 60\n"
        "  particles: 20\n"
        "  adaptation_start: 10\n"
        "  prior_covariance_draws: 40\n"
        "ensemble:\n"
        "  replicates: 2\n"
        "  generator: step\n"
        "  bootstrap_resamples: 50\n"
        "  inference:\n"
        "    iterations: 40\n"
        "    particles: 20\n"
        "    adaptation_start: 10\n"
        "    prior_covariance_draws: 40\n"
        "prior_check:\n"
        "  draws: 2000\n"
    )
    return str(path)


@pytest.fixture(autouse=True)
def setup_test_environment(monkeypatch):
    """Isolate each test from the caller's thread setting."""
    monkeypatch.delenv("CUTREND_THREADS", raising=False)
    yield


# Pytest configuration
def pytest_configure(config):
    """Configure pytest."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests as integration tests"
    )
    config.addinivalue_line(
        "markers", "unit: marks tests as unit tests"
    )


def pytest_collection_modifyitems(config, items):
    """Modify test collection."""
    for item in items:
        if "unit" in str(item.fspath):
            item.add_marker(pytest.mark.unit)

        if "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)

        if "full_pipeline" in str(item.fspath):
            item.add_marker(pytest.mark.slow)
