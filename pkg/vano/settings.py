from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file='.env', env_file_encoding='utf-8', extra='ignore')

    APP_TITLE: str = "vano"
    APP_VERSION: str = "0.3.0"

    VANO_THREADS: int = Field(1, ge=1)
    VANO_DETERMINISTIC: bool = True
    VANO_LOG_LEVEL: str = "INFO"

    VANO_CHECKPOINT_EVERY: int = Field(2000, ge=1)
    VANO_RUNS_DIR: str = "runs"


settings = Settings()
