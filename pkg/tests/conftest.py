"""Shared test configuration and fixtures."""
import os
import sys
from pathlib import Path
from typing import Any, Generator

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from releff.config import Settings, get_settings  # noqa: E402
from releff.models.data import ContinuousDataset, OrdinalDataset, SurvivalDataset  # noqa: E402
from releff.simulation.dgp import CdcDgp, ExpSurvivalDgp  # noqa: E402
from releff.utils.streams import derive_stream  # noqa: E402

from tests.utils import DataFactory  # noqa: E402


@pytest.fixture(autouse=True)
def clear_settings_cache() -> Generator[None, None, None]:
    """Every test resolves settings from its own environment."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def settings(monkeypatch: Any) -> Settings:
    """Default settings with no RELEFF_* variables leaking in."""
    for key in list(os.environ):
        if key.startswith("RELEFF_"):
            monkeypatch.delenv(key, raising=False)
    return Settings(_env_file=None)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for ad hoc draws."""
    return np.random.default_rng(20240601)


@pytest.fixture
def ordinal_data() -> OrdinalDataset:
    """400 rows, K = 3, ordered age group and a continuous bmi."""
    return DataFactory.ordinal(n=400, seed=11)


@pytest.fixture
def discrete_ordinal_data() -> OrdinalDataset:
    """400 rows, K = 3, a single ordered age group covariate."""
    return DataFactory.ordinal(n=400, seed=12, continuous=False)


@pytest.fixture
def continuous_data() -> ContinuousDataset:
    """300 rows with a linear outcome in age group and bmi."""
    return DataFactory.continuous(n=300, seed=13)


@pytest.fixture
def cdc_data() -> OrdinalDataset:
    """600 rows from the hospitalization design."""
    return CdcDgp().generate(600, derive_stream(5))


@pytest.fixture
def survival_data() -> SurvivalDataset:
    """400 rows from the exponential design on the 0.2 grid to 3."""
    return ExpSurvivalDgp().generate(400, derive_stream(7))


@pytest.fixture
def ordinal_csv(tmp_path: Path, ordinal_data: OrdinalDataset) -> dict[str, Path]:
    """CSV and schema files of ordinal_data."""
    return DataFactory.write_files(tmp_path, ordinal_data)


@pytest.fixture
def survival_csv(tmp_path: Path, survival_data: SurvivalDataset) -> dict[str, Path]:
    """CSV (grid times as observed times) and schema files of survival_data."""
    return DataFactory.write_files(tmp_path, survival_data)


def pytest_configure(config: Any) -> None:
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "unit: Unit tests (fast, isolated)")
    config.addinivalue_line("markers", "integration: Integration tests (command-line runs on small inputs)")
    config.addinivalue_line("markers", "slow: Monte Carlo acceptance runs (minutes)")
