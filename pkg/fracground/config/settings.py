"""
Configuration Settings

This module manages environment-level settings for fracground runs.
Only the output location is read from the environment; numerical guards
are fixed defaults so that a run is described entirely by its resolved
configuration and seed.
"""

from typing import ClassVar

from pydantic import BaseModel, ConfigDict
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(
        env_prefix="FRACGROUND_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    PROJECT_NAME: ClassVar[str] = "fracground"
    VERSION: ClassVar[str] = "1.0.0"

    # Output Settings
    OUTPUT_DIR: str = "runs"


class NumericalDefaults(BaseModel):
    """Defaults that change results and therefore never come from the environment"""
    model_config = ConfigDict(frozen=True)

    LOG_LEVEL: str = "WARNING"

    # Parallelism
    MAX_WORKERS: int = 4

    # Numerical guards
    FIBERING_MAX_EXPANSIONS: int = 200
    BOUNDARY_TOLERANCE: float = 1e-3  # relative to max |u|
    PERIODIFICATION_TOLERANCE: float = 1e-6  # relative to max |u|
    STRONG_RESIDUAL_FACTOR: float = 10.0  # times the optimizer gradient tolerance


# Create settings instance
settings = Settings()
defaults = NumericalDefaults()

# Export settings
__all__ = ["Settings", "NumericalDefaults", "settings", "defaults"]
