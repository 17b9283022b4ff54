from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    app_env: str = "development"
    log_level: str = "INFO"

    corpus: Path | None = None
    limit_bytes: int = 1024 * 1024
    chunk_len: int = 64
    seed: int = 0
    jobs: int = 1

    run_dir: Path = Path("runs/default")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="RLTC_",
        case_sensitive=False,
        extra="ignore",
    )

    @property
    def compressor_path(self) -> Path:
        return self.run_dir / "compressor.rltm"

    @property
    def decompressor_path(self) -> Path:
        return self.run_dir / "decompressor.rltm"


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
