"""Configuration management for the CV teleportation simulator."""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


def _int_setting(name: str, default: int) -> int:
    raw = os.getenv(name, str(default))
    try:
        return int(raw)
    except ValueError:
        raise ValueError(
            f"{name} must be an integer, got {raw!r}. "
            f"Fix it in the environment or in your .env file"
        ) from None


LOG_LEVEL = os.getenv('CV_TELEPORT_LOG_LEVEL', 'INFO')

# Empty path disables the run archive
_archive = os.getenv('CV_TELEPORT_ARCHIVE_PATH', '')
ARCHIVE_PATH: Optional[Path] = Path(_archive) if _archive else None

MAX_WORKERS = _int_setting('CV_TELEPORT_MAX_WORKERS', 0)  # 0 = use CPU count
MAX_CONCURRENT_POINTS = _int_setting('CV_TELEPORT_MAX_CONCURRENT_POINTS', 8)

DEFAULT_SEED = _int_setting('CV_TELEPORT_DEFAULT_SEED', 20030101)
DEFAULT_SAMPLES = _int_setting('CV_TELEPORT_DEFAULT_SAMPLES', 200_000)
MC_CHUNK = _int_setting('CV_TELEPORT_MC_CHUNK', 131_072)

if MC_CHUNK <= 0:
    raise ValueError("CV_TELEPORT_MC_CHUNK must be positive")


def worker_count() -> int:
    """Resolve the configured worker count (0 means one per CPU)."""
    return MAX_WORKERS if MAX_WORKERS > 0 else (os.cpu_count() or 1)
