"""
Runtime Settings for the Schur-sigma Toolkit

Caps, thread counts and seeds come from the environment (optionally a .env
file) with conservative defaults. The CLI overrides individual values from
its flags.

Usage:
    from services.config import get_settings, configure_logging

    configure_logging("DEBUG")
    settings = get_settings()
    if order > settings.max_order:
        ...
"""

import logging
import os
import sys
import threading
from typing import Optional

import structlog
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

from services.errors import ConfigurationError

load_dotenv()

logger = structlog.get_logger(__name__)

PROFILES = ("default", "ci", "extended")


class Settings(BaseModel):
    """Resource caps and run defaults"""

    profile: str = "default"
    max_order: int = Field(default=3**20, gt=0)
    iso_cap: int = Field(default=3**7, gt=0)
    aut_cap: int = Field(default=3**6, gt=0)
    bfs_cap: int = Field(default=3**16, gt=0)
    closure_class: int = Field(default=6, gt=0)
    closure_cap: int = Field(default=3**14, gt=0)
    max_pclass: int = Field(default=12, gt=0)
    threads: int = Field(default=1, gt=0)
    seed: int = 20060216
    log_level: str = "INFO"
    tracing_enabled: bool = False

    @field_validator("profile")
    @classmethod
    def _known_profile(cls, value: str) -> str:
        if value not in PROFILES:
            raise ValueError(f"unknown profile {value!r}, expected one of {PROFILES}")
        return value

    @property
    def extended(self) -> bool:
        return self.profile == "extended"


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        # caps are usually written as powers of three
        if "**" in raw:
            base, exp = raw.split("**", 1)
            return int(base) ** int(exp)
        return int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}") from e


def load_settings() -> Settings:
    """Build settings from environment variables"""
    profile = os.getenv("SCHUR_PROFILE", "default")
    bfs_default = 3**10 if profile == "ci" else 3**16
    try:
        return Settings(
            profile=profile,
            max_order=_env_int("SCHUR_MAX_ORDER", 3**20),
            iso_cap=_env_int("SCHUR_ISO_CAP", 3**7),
            aut_cap=_env_int("SCHUR_AUT_CAP", 3**6),
            bfs_cap=_env_int("SCHUR_BFS_CAP", bfs_default),
            closure_class=_env_int("SCHUR_CLOSURE_CLASS", 6),
            closure_cap=_env_int("SCHUR_CLOSURE_CAP", 3**14),
            max_pclass=_env_int("SCHUR_MAX_PCLASS", 12),
            threads=_env_int("SCHUR_THREADS", 1),
            seed=_env_int("SCHUR_SEED", 20060216),
            log_level=os.getenv("SCHUR_LOG_LEVEL", "INFO").upper(),
            tracing_enabled=os.getenv("TRACING_ENABLED", "false").lower() == "true",
        )
    except ValueError as e:
        raise ConfigurationError(str(e)) from e


_settings: Optional[Settings] = None
_lock = threading.Lock()


def get_settings() -> Settings:
    """Get or create the process-wide settings"""
    global _settings

    if _settings is None:
        with _lock:
            if _settings is None:
                _settings = load_settings()

    return _settings


def override_settings(**changes) -> Settings:
    """Replace selected fields of the process-wide settings"""
    global _settings

    with _lock:
        current = _settings or load_settings()
        try:
            _settings = Settings(**{**current.model_dump(), **changes})
        except ValueError as e:
            raise ConfigurationError(str(e)) from e
    logger.debug("settings_overridden", fields=sorted(changes))
    return _settings


def configure_logging(level: str = "INFO"):
    """Route structlog output to stderr at the given level"""
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ConfigurationError(f"unknown log level {level!r}")

    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
