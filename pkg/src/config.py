"""
Configuration management for the optimizer library and harness.
"""
import os
from pydantic import Field
from pydantic_settings import BaseSettings
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    """Application settings."""

    # Output
    output_dir: str = os.getenv("TR_OUTPUT_DIR", "results")

    # Execution
    default_jobs: int = int(os.getenv("TR_JOBS", "1"))
    show_progress: bool = Field(default=True, validation_alias="TR_SHOW_PROGRESS")
    record_wall_time: bool = Field(default=True, validation_alias="TR_RECORD_WALL_TIME")

    # Bound checking
    stochastic_seeds: int = int(os.getenv("TR_STOCHASTIC_SEEDS", "20"))
    bound_rtol: float = float(os.getenv("TR_BOUND_RTOL", "1e-9"))
    bound_atol: float = float(os.getenv("TR_BOUND_ATOL", "1e-10"))

    # Logging
    log_level: str = os.getenv("LOG_LEVEL", "INFO")

    class Config:
        env_file = ".env"
        case_sensitive = False
        extra = "ignore"


# Global settings instance
settings = Settings()
