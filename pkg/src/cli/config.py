"""Process settings and experiment configuration files.

Settings come from environment variables with .env file support; experiment
parameters come from a JSON file whose values command-line flags override.
"""

import logging
import sys
from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.data import GenConfig
from src.models import ArchitectureConfig
from src.train import TrainConfig

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """Process settings loaded from environment variables.

    Attributes:
        BAGFORGE_LOG: Log verbosity (error, info or debug).
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    BAGFORGE_LOG: Literal["error", "info", "debug"] = "info"

    @property
    def log_level(self) -> Literal["DEBUG", "INFO", "ERROR"]:
        """Return the logging level name for BAGFORGE_LOG."""
        levels: dict[str, Literal["DEBUG", "INFO", "ERROR"]] = {
            "error": "ERROR",
            "info": "INFO",
            "debug": "DEBUG",
        }
        return levels[self.BAGFORGE_LOG]


@lru_cache
def get_settings() -> Settings:
    """Return cached Settings instance.

    Uses lru_cache to ensure settings are only loaded once.
    """
    return Settings()


def configure_logging(settings: Settings | None = None) -> None:
    """Send log records to standard error at the configured level."""
    settings = settings or get_settings()
    logging.basicConfig(
        level=settings.log_level,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


class SplitConfig(BaseModel):
    """Hold-out fraction and fold count of the split protocol."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    test_fraction: float = Field(default=0.15, gt=0, lt=1)
    folds: int = Field(default=5, ge=2)


class ExperimentConfig(BaseModel):
    """Everything a run needs besides its input files.

    Attributes:
        gen: Synthetic generator parameters.
        model: Architecture choices (widths, prompts, gating).
        split: Split protocol.
        train: Optimizer and loop settings.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    gen: GenConfig = Field(default_factory=GenConfig)
    model: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @classmethod
    def load(cls, path: str | Path | None) -> "ExperimentConfig":
        """Read a JSON config file; missing sections and a missing path take defaults."""
        if path is None:
            return cls()
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        """Route one seed to the generator and the trainer."""
        if seed is None:
            return self
        return self.model_copy(
            update={
                "gen": self.gen.with_overrides(seed=seed),
                "train": self.train.with_overrides(seed=seed),
            }
        )
