"""
Configuration management for the weak-to-strong simulator.

This module loads environment variables (optionally from a project-root .env
file) and exposes the run defaults used by the CLI and the sweep service.
"""

import logging
import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), "..", "..", ".env"))

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except ValueError:
        return default


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, str(default)))
    except ValueError:
        return default


class Config:
    """Configuration class for managing run defaults."""

    # Fock engine
    TRUNCATION_DIM: int = _env_int("WEAKSTRONG_TRUNCATION_DIM", 128)

    # Output layout
    OUTPUT_DIR: str = os.getenv("WEAKSTRONG_OUTPUT_DIR", "out")

    # Tomography sampling
    DEFAULT_SHOTS: int = _env_int("WEAKSTRONG_DEFAULT_SHOTS", 10000)
    DEFAULT_SEED: int = _env_int("WEAKSTRONG_DEFAULT_SEED", 2020)

    # Sweep execution
    MAX_WORKERS: int = _env_int("WEAKSTRONG_MAX_WORKERS", 1)

    LOG_LEVEL: str = os.getenv("WEAKSTRONG_LOG_LEVEL", "INFO").upper()
    CHECK_TOLERANCE: float = _env_float("WEAKSTRONG_CHECK_TOLERANCE", 1e-6)

    def validate_config(self) -> list[str]:
        """Validate configuration and return a list of problems (empty if valid)."""
        problems = []

        if self.TRUNCATION_DIM < 8:
            problems.append("WEAKSTRONG_TRUNCATION_DIM must be at least 8")
        if self.DEFAULT_SHOTS < 1:
            problems.append("WEAKSTRONG_DEFAULT_SHOTS must be at least 1")
        if self.MAX_WORKERS < 1:
            problems.append("WEAKSTRONG_MAX_WORKERS must be at least 1")
        if self.LOG_LEVEL not in LOG_LEVELS:
            problems.append(f"WEAKSTRONG_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")
        if not self.CHECK_TOLERANCE > 0.0:
            problems.append("WEAKSTRONG_CHECK_TOLERANCE must be positive")

        return problems

    @classmethod
    def get_output_dir(cls, base_dir: str, run_hash: str) -> str:
        """Get the output directory for a run, keyed by its config hash."""
        return os.path.join(base_dir, cls.OUTPUT_DIR, run_hash)

    @classmethod
    def log_level(cls) -> int:
        """Numeric logging level, falling back to INFO."""
        return getattr(logging, cls.LOG_LEVEL, logging.INFO)


# Create a singleton instance
config = Config()
