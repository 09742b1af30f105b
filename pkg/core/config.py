from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    battery_seed: int = 0
    battery_random_models: int = 7
    max_valuations: int = 10_000_000
    max_poset_size: int = 6
    log_level: str = "WARNING"
    corpus_dir: Path = Path("corpus")
    rate_limit: str = "30/minute"
    cors_origins: list[str] = ["*"]

    model_config = SettingsConfigDict(env_file=".env", env_prefix="DLE_", extra="ignore")


@lru_cache
def get_settings() -> Settings:
    return Settings()
