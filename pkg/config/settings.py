import os
import logging
from pathlib import Path
from dotenv import load_dotenv
from .constants import *

# Project layout
PROJECT_ROOT = Path(__file__).parent.parent
DATA_DIR = PROJECT_ROOT / "data"
INPUT_DIR = DATA_DIR / "input"
OUTPUT_DIR = DATA_DIR / "output"
LOG_FILE = PROJECT_ROOT / "gelasso.log"

# GELASSO_* overrides may come from a local .env
load_dotenv(PROJECT_ROOT / ".env")

for _directory in (INPUT_DIR, OUTPUT_DIR):
    _directory.mkdir(parents=True, exist_ok=True)


def get_env_setting(key, default=None, cast=None):
    """
    Read a GELASSO_* setting from the environment

    Args:
        key: Variable name
        default: Returned when the variable is unset or cannot be cast
        cast: Optional conversion such as int
    """
    raw = os.getenv(key)
    if raw is None or raw == "":
        return default
    if cast is None:
        return raw
    try:
        return cast(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring {key}={raw!r}")
        return default


def setup_logging(level=None):
    """Console plus log-file logging; level falls back to GELASSO_LOG_LEVEL"""
    level = (level or get_env_setting("GELASSO_LOG_LEVEL", DEFAULT_LOG_LEVEL)).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=DEFAULT_LOG_FORMAT,
        handlers=[logging.StreamHandler(), logging.FileHandler(LOG_FILE)],
        force=True,
    )
