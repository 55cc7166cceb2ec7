"""Process-level settings"""
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Environment-driven defaults (prefix ``CLASS2SIMI_``)"""

    model_config = SettingsConfigDict(env_prefix="CLASS2SIMI_", env_file=".env", extra="ignore")

    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: Optional[str] = None
    DEFAULT_SEED: int = 0
    PROBABILITY_CLAMP: float = 1e-7


def get_settings() -> Settings:
    return Settings()
