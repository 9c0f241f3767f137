from __future__ import annotations

import os
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Reproducibility
    CADOPS_SEED: int = 0

    # Parallelism (0 = all cores); reductions stay in model-id order either way
    CADOPS_THREADS: int = 0

    # Feature extraction
    CADOPS_GRID_RESOLUTION: int = 5

    # Sketch recovery
    CADOPS_SKETCH_SAMPLES: int = 16

    # Logging
    LOG_LEVEL: str = "INFO"

    # OpenTelemetry
    OTEL_ENABLED: bool = False
    OTEL_EXPORTER_OTLP_ENDPOINT: str = "http://localhost:4317"
    OTEL_SERVICE_NAME: str = "cadops"

    def resolve_threads(self, requested: int | None = None) -> int:
        """Return the worker count to use, falling back to ``CADOPS_THREADS``.

        ``0`` means one worker per available core.
        """
        value = self.CADOPS_THREADS if requested is None else requested
        if value < 0:
            raise ValueError(f"thread count must be >= 0, got {value}")
        return value or (os.cpu_count() or 1)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return a cached singleton :class:`Settings` instance."""
    return Settings()
