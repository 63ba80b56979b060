"""Logging setup driven by the FREQCLUE_LOG environment variable."""

import logging
import os
import sys

LOG_ENV_VAR = "FREQCLUE_LOG"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_LEVEL = "WARNING"


def resolve_level(value=None) -> int:
    """Translate a level name (or None for the environment) into a logging level."""
    if value is None:
        value = os.environ.get(LOG_ENV_VAR, DEFAULT_LEVEL)
    level = logging.getLevelName(str(value).strip().upper())
    if not isinstance(level, int):
        return logging.getLevelName(DEFAULT_LEVEL)
    return level


def setup_logging(level=None) -> logging.Logger:
    """
    Configure the root logger to write to stderr.

    stdout stays reserved for machine-readable output of the CLI.
    """
    root = logging.getLogger()
    root.setLevel(resolve_level(level))
    if not any(getattr(h, "_freqclue", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._freqclue = True
        root.addHandler(handler)
    return root
