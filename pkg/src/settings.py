"""
Environment-driven settings.

Values come from the process environment (optionally seeded from a .env
file). They are read at call time so a changed environment is picked up
without re-importing the module.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

TOOL_NAME = "scnplus"
TOOL_VERSION = "1.0.0"


def get_default_seed() -> int:
    """Seed used when a command is run without --seed."""
    raw = os.getenv("SCNPLUS_DEFAULT_SEED", "0")
    try:
        seed = int(raw)
    except ValueError:
        raise ValueError(f"SCNPLUS_DEFAULT_SEED must be an integer, got {raw!r}")
    if seed < 0:
        raise ValueError(f"SCNPLUS_DEFAULT_SEED must be non-negative, got {seed}")
    return seed


def get_log_level() -> str:
    """Log level for the stderr sink."""
    return os.getenv("SCNPLUS_LOG_LEVEL", "INFO").upper()


def get_log_dir() -> Path:
    """Directory for the rotating file sink."""
    return Path(os.getenv("SCNPLUS_LOG_DIR", "logs"))


def get_data_dir() -> Path:
    """Directory searched for the benchmark CSV files named by presets."""
    return Path(os.getenv("SCNPLUS_DATA_DIR", "data"))
