from functools import lru_cache
import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel

# Pick up a local .env before reading the environment
load_dotenv()

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class Settings(BaseModel):
    log_level: str = "error"
    tol: float = 1e-9
    layout_tol: float = 1e-12
    region_cap: int = 1_000_000
    max_rounds: int = 1000


@lru_cache
def get_settings() -> Settings:
    level = os.getenv("CAT0_LOG", "error").lower()
    if level not in LOG_LEVELS:
        level = "error"
    return Settings(
        log_level=level,
        tol=float(os.getenv("CAT0_TOL", 1e-9)),
        layout_tol=float(os.getenv("CAT0_LAYOUT_TOL", 1e-12)),
        region_cap=int(os.getenv("CAT0_REGION_CAP", 1_000_000)),
        max_rounds=int(os.getenv("CAT0_MAX_ROUNDS", 1000)),
    )


def configure_logging(level: str | None = None):
    """Configure the root logger for command-line use"""
    name = (level or get_settings().log_level).lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(name, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )
