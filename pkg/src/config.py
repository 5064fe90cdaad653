from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Semilla global; si se define, sustituye la semilla del escenario
    SEED: Optional[int] = None

    # Nivel de logging de la CLI (los registros van a stderr)
    LOG_LEVEL: str = "WARNING"

    # Parámetros por defecto de la firma QDS
    DEFAULT_SECURITY_PARAMETER: int = 128
    DEFAULT_RETRY_BOUND: int = 8

    # Configuración de la búsqueda de estrategias
    SEARCH_SECURITY_PARAMETER: int = 8
    SEARCH_BUDGET: int = 10_000
    SEARCH_WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_prefix="QBA_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )


settings = Settings()
