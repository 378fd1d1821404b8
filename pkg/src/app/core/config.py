import logging
import os
from typing import Literal

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict


logger = logging.getLogger(__name__)

dotenv_path = os.path.join(os.path.dirname(__file__), '..', '..', '..', '.env')
load_dotenv(dotenv_path=dotenv_path)


class Settings(BaseSettings):
    ENVIRONMENT: str = "development"
    PROJECT_NAME: str = "kumachart"
    LOG_LEVEL: str = "INFO"

    # Chart and study defaults
    DEFAULT_ALPHA: float = 0.0027
    DEFAULT_REPLICATIONS: int = 25000
    DEFAULT_GRID_STEP: float = 1e-5
    MAX_FIT_FAILURE_RATE: float = 0.01
    CENTER_LINE_MODE: Literal["median", "mean"] = "median"

    # Replication workers
    WORKERS: int = 1
    CHUNK_SIZE: int = 500

    # MLE solver
    MLE_BRACKET_LOW: float = 1e-3
    MLE_BRACKET_HIGH: float = 1e3
    MLE_MAX_BRACKET_EXPANSIONS: int = 8
    MLE_MAX_ITER: int = 500
    MLE_XTOL: float = 1e-10
    GRADIENT_TOL: float = 1e-6

    model_config = SettingsConfigDict(
        env_file=dotenv_path,
        env_file_encoding='utf-8',
        case_sensitive=True,
        extra='ignore'
    )


settings = Settings()

if not 0.0 < settings.DEFAULT_ALPHA < 1.0:
    logger.warning(f"DEFAULT_ALPHA={settings.DEFAULT_ALPHA} is outside (0, 1); pass --alpha explicitly.")
if settings.WORKERS < 1:
    logger.warning(f"WORKERS={settings.WORKERS} is not a positive worker count; replications will run in-process.")
if not 0.0 <= settings.MAX_FIT_FAILURE_RATE < 1.0:
    logger.warning(f"MAX_FIT_FAILURE_RATE={settings.MAX_FIT_FAILURE_RATE} is not a fraction in [0, 1).")
