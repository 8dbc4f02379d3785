"""
utils/settings.py
-----------------
Process configuration read from the environment (optionally a ``.env`` file)
and the one place logging handlers are installed.

Keys:
  LOG_LEVEL              logging level name (default INFO)
  LEVYLAB_OUTPUT_DIR     directory for CLI outputs given as bare file names (default ".")
  LEVYLAB_DEFAULT_SEED   seed used when --seed is omitted (default 0)
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_KEYS = ("LOG_LEVEL", "LEVYLAB_OUTPUT_DIR", "LEVYLAB_DEFAULT_SEED")

_dotenv_loaded = False


@dataclass(frozen=True, slots=True)
class Settings:
    log_level: str = "INFO"
    output_dir: Path = Path(".")
    default_seed: int = 0


def load_settings() -> Settings:
    """Read the environment once per process (``.env`` included)."""
    global _dotenv_loaded
    if not _dotenv_loaded:
        load_dotenv()
        _dotenv_loaded = True

    raw_seed = os.getenv("LEVYLAB_DEFAULT_SEED", "0")
    try:
        seed = int(raw_seed)
        if not 0 <= seed < 2**64:
            raise ValueError(raw_seed)
    except ValueError:
        logger.warning("LEVYLAB_DEFAULT_SEED=%r is not a 64-bit seed; using 0.", raw_seed)
        seed = 0

    return Settings(
        log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
        output_dir=Path(os.getenv("LEVYLAB_OUTPUT_DIR", ".")),
        default_seed=seed,
    )


def configure_logging(level_name: str) -> None:
    level = getattr(logging, level_name, logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(message)s")
    logging.getLogger(__name__).debug("Using LOG_LEVEL=%s", level_name)
