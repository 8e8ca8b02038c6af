"""
Runtime settings, read from IACOUNT_* environment variables (and a .env
file, if present).
"""

import os
from typing import Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

ENV_PREFIX = "IACOUNT_"


class Settings(BaseModel):
    """Defaults for the estimators, the feasibility test and the CLI."""

    seed: int = Field(0, ge=0, lt=2**64, description="Master seed for random streams")
    epsilon: float = Field(0.05, gt=0, description="Relative-error target for Monte Carlo")
    max_samples: int = Field(10_000_000, ge=1)
    min_samples: int = Field(100, ge=2, description="Samples drawn before any stop decision")
    checkpoint_every: int = Field(10_000, ge=1)
    batch_size: int = Field(1_000, ge=1, description="Samples per worker task")
    rank_rtol: float = Field(1e-8, gt=0, lt=1, description="sigma_min/sigma_max feasibility threshold")
    singular_rtol: float = Field(1e-12, ge=0, lt=1, description="Relative LU pivot treated as zero")
    threads: int = Field(1, ge=1)

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        environ = os.environ if environ is None else environ
        values = {}
        for name in cls.model_fields:
            key = ENV_PREFIX + name.upper()
            if key in environ:
                values[name] = environ[key]
        return cls(**values)


DEFAULTS = Settings()


def get_settings() -> Settings:
    """Load .env (without overriding the real environment) and read settings."""
    load_dotenv()
    return Settings.from_env()
