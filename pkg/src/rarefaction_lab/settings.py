# src/rarefaction_lab/settings.py
"""
Process-level settings from the environment. A `.env` file in the working
directory is loaded by the CLI before these are read.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .errors import ConfigError

WORKERS_ENV      = "RAREFACTION_WORKERS"
DATABASE_URL_ENV = "RAREFACTION_DATABASE_URL"
LOG_LEVEL_ENV    = "RAREFACTION_LOG_LEVEL"

LEDGER_FILE = "runs.db"
LOG_LEVELS  = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    workers:      int = 1
    database_url: Optional[str] = None
    log_level:    str = "INFO"

    @property
    def log_level_value(self) -> int:
        return getattr(logging, self.log_level)


def load_settings(environ: Optional[Mapping[str, str]] = None) -> Settings:
    env = os.environ if environ is None else environ

    raw = env.get(WORKERS_ENV, "1").strip()
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"not an integer: {raw!r}") from None
    if workers < 1:
        raise ConfigError(WORKERS_ENV, f"must be at least 1, got {workers}")

    level = env.get(LOG_LEVEL_ENV, "INFO").strip().upper()
    if level not in LOG_LEVELS:
        raise ConfigError(LOG_LEVEL_ENV, f"unknown level {level!r}, expected one of {', '.join(LOG_LEVELS)}")

    return Settings(workers=workers, database_url=env.get(DATABASE_URL_ENV) or None, log_level=level)


def database_url_for(settings: Settings, output_dir: Path) -> str:
    if settings.database_url:
        return settings.database_url
    return f"sqlite:///{Path(output_dir).resolve() / LEDGER_FILE}"
