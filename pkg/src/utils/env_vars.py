"""Environment variable configuration management.

This module provides a centralized interface for loading settings that are
not part of a run configuration file: where outputs go, how many threads the
spectral transforms may use, and the log level. It uses Pydantic for type
validation and automatic loading from .env files.
"""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Configs(BaseSettings):
    """Configuration settings loaded from environment variables.

    Attributes
    ----------
    out : pathlib.Path or None
        Output directory. When set (``DAMPEDWAVE_OUT``) it overrides both the
        ``--out`` flag and ``outputs.directory`` of a run configuration.
    threads : int or None
        Default worker count handed to ``scipy.fft`` (``DAMPEDWAVE_THREADS``).
    log_level : str, default='INFO'
        Root logger level (``DAMPEDWAVE_LOG_LEVEL``).

    Examples
    --------
    >>> from src.utils.env_vars import Configs
    >>> configs = Configs()
    >>> print(configs.log_level)
    'INFO'
    """

    model_config = SettingsConfigDict(
        env_prefix="DAMPEDWAVE_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_ignore_empty=True,
        extra="ignore",
    )

    out: Path | None = None
    threads: int | None = Field(default=None, ge=1)
    log_level: str = Field(
        default="INFO", pattern=r"^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$"
    )
