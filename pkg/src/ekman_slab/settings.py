"""Settings of the Ekman slab laboratory."""

import os
from enum import StrEnum
from typing import Annotated

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import __project_name__


class LogLevel(StrEnum):
    """Supported log levels."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class Settings(BaseSettings):
    """Settings."""

    model_config = SettingsConfigDict(
        env_prefix=f"{__project_name__.upper()}_",
        extra="ignore",
        env_file=".env",
        env_file_encoding="utf-8",
    )

    workers: Annotated[
        int | None,
        Field(
            None,
            ge=1,
            description="Size of the worker pool used by sweeps - defaults to the number of logical cores.",
        ),
    ]

    log_level: Annotated[
        LogLevel,
        Field(
            LogLevel.INFO,
            description="Level of log messages rendered on the console.",
        ),
    ]

    @property
    def effective_workers(self) -> int:
        """Worker pool size with the logical-core default applied."""
        return self.workers or os.cpu_count() or 1
