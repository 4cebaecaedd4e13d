"""Tests for configuration management."""
from typing import Any

import pytest
from pydantic import ValidationError
from releff.config import Settings, get_settings
from releff.efficiency.analysis import AnalysisRequest


class TestSettings:
    """Test Settings configuration."""

    def test_defaults(self, settings: Settings) -> None:
        """Test the documented defaults."""
        assert settings.log_level == "INFO"
        assert settings.threads == 1
        assert settings.level == 0.95
        assert settings.min_split_n == 40
        assert settings.newton_max_iter == 100
        assert settings.newton_tol == 1e-10
        assert settings.q_max == 5
        assert settings.q_max_survival == 7
        assert settings.survival_floor == 0.01
        assert settings.min_valid_fraction == 0.95

    def test_environment_override(self, monkeypatch: Any) -> None:
        """Test RELEFF_* variables override defaults."""
        monkeypatch.setenv("RELEFF_THREADS", "4")
        monkeypatch.setenv("RELEFF_LEVEL", "0.9")
        monkeypatch.setenv("RELEFF_Q_MAX", "3")

        settings = Settings(_env_file=None)

        assert settings.threads == 4
        assert settings.level == 0.9
        assert settings.q_max == 3

    def test_log_level_is_upper_cased(self, monkeypatch: Any) -> None:
        """Test log level normalization."""
        monkeypatch.setenv("RELEFF_LOG_LEVEL", "debug")
        assert Settings(_env_file=None).log_level == "DEBUG"

    def test_invalid_log_level(self, monkeypatch: Any) -> None:
        """Test invalid log level."""
        monkeypatch.setenv("RELEFF_LOG_LEVEL", "INVALID")

        with pytest.raises(ValidationError) as exc_info:
            Settings(_env_file=None)

        assert "log_level" in str(exc_info.value)

    @pytest.mark.parametrize(
        "name,value",
        [
            ("RELEFF_LEVEL", "1.5"),
            ("RELEFF_THREADS", "0"),
            ("RELEFF_SURVIVAL_FLOOR", "0"),
            ("RELEFF_MIN_VALID_FRACTION", "1.2"),
        ],
    )
    def test_out_of_range_values(self, monkeypatch: Any, name: str, value: str) -> None:
        """Test range checks on numeric settings."""
        monkeypatch.setenv(name, value)

        with pytest.raises(ValidationError) as exc_info:
            Settings(_env_file=None)

        assert name.removeprefix("RELEFF_").lower() in str(exc_info.value)

    def test_env_file_loading(self, tmp_path: Any, monkeypatch: Any) -> None:
        """Test loading from a .env file."""
        env_file = tmp_path / ".env"
        env_file.write_text("RELEFF_MIN_SPLIT_N=60\nRELEFF_SEPARATION_BOUND=25\n")
        monkeypatch.delenv("RELEFF_MIN_SPLIT_N", raising=False)

        settings = Settings(_env_file=str(env_file))

        assert settings.min_split_n == 60
        assert settings.separation_bound == 25.0

    def test_get_settings_is_cached(self) -> None:
        """Test get_settings returns the same instance until the cache is cleared."""
        first = get_settings()
        assert get_settings() is first
        get_settings.cache_clear()
        assert get_settings() is not first


class TestAnalysisRequestDefaults:
    """Test settings flowing into analysis requests."""

    def test_from_settings_uses_numeric_defaults(self, monkeypatch: Any) -> None:
        """Test request options come from settings unless given."""
        monkeypatch.setenv("RELEFF_NEWTON_MAX_ITER", "40")
        settings = Settings(_env_file=None)

        request = AnalysisRequest.from_settings(settings, estimand="dim", kind="fully_adjusted", q_max=2)

        assert request.newton_max_iter == 40
        assert request.q_max == 2
        assert request.newton == {"max_iter": 40, "tol": 1e-10, "separation_bound": 30.0}

    def test_none_values_are_ignored(self, settings: Settings) -> None:
        """Test None leaves the default in place."""
        request = AnalysisRequest.from_settings(settings, estimand="mw", kind="working_model", u=None, time=None)
        assert request.u is None
        assert request.strategy == "auto"
