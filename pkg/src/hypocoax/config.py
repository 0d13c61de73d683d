"""
Process settings and logging setup.

Settings come from the environment (optionally a .env file loaded with
python-dotenv); run parameters live in the pydantic models of
hypocoax.simulator.run_config.

Author: Hypocoax Team
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    """Environment-driven settings."""
    threads: int
    log_level: str
    output_dir: Path

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            threads=_threads(os.getenv("HYPOCOAX_THREADS")),
            log_level=os.getenv("HYPOCOAX_LOG_LEVEL", "INFO").upper(),
            output_dir=Path(os.getenv("HYPOCOAX_OUTPUT_DIR", "results")),
        )


def _threads(raw: Optional[str]) -> int:
    """joblib n_jobs: -1 (all cores) or a positive count; anything else falls back to -1."""
    if not raw:
        return -1
    try:
        threads = int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring non-integer HYPOCOAX_THREADS={raw!r}")
        return -1
    if threads == -1 or threads >= 1:
        return threads
    logging.getLogger(__name__).warning(f"Ignoring HYPOCOAX_THREADS={threads}; expected -1 or a positive count")
    return -1


def get_settings() -> Settings:
    return Settings.from_env()


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for an entry point."""
    level_name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT
    )
