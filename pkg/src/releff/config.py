"""Configuration management for releff."""
from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Run-time settings read from RELEFF_* environment variables or a .env file."""

    model_config = SettingsConfigDict(
        env_prefix="RELEFF_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Logging level")

    # Execution
    threads: int = Field(default=1, description="Worker cap for replicate-level parallelism", ge=1)

    # Inference
    level: float = Field(default=0.95, description="Confidence level of reported intervals", gt=0.0, lt=1.0)
    min_split_n: int = Field(default=40, description="Smallest n accepted by the sample-splitting test", ge=4)

    # Nuisance fitting
    newton_max_iter: int = Field(default=100, description="Newton iteration cap", ge=1)
    newton_tol: float = Field(default=1e-10, description="Gradient-norm tolerance scaled by n", gt=0.0)
    separation_bound: float = Field(default=30.0, description="Coefficient size treated as divergence", gt=0.0)
    q_max: int = Field(default=5, description="Largest polynomial degree searched by BIC", ge=1)
    q_max_survival: int = Field(default=7, description="Largest polynomial degree for hazard fits", ge=1)

    # Survival
    survival_floor: float = Field(default=0.01, description="Floor applied to S and H in denominators", gt=0.0, lt=1.0)

    # Double bootstrap
    min_valid_fraction: float = Field(
        default=0.95, description="Smallest share of valid inner replicates", gt=0.0, le=1.0
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Upper-case the level name and check it is a logging level."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return v_upper


@lru_cache()
def get_settings() -> Settings:
    """
    Settings resolved once per process from RELEFF_* variables and .env.

    Returns:
        Settings: The resolved settings

    Raises:
        ValidationError: If an environment value is invalid
    """
    return Settings()
