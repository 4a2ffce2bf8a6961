from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Toolkit configuration from environment variables (prefix SMK_)"""

    model_config = SettingsConfigDict(
        env_prefix="SMK_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = "INFO"

    # Parallelism; SMK_THREADS wins over --threads
    threads: int | None = None

    # Simulation
    quad_order: int = 48
    sampling_rate: float = 5.0e6
    time_chunk: int = 512
    max_grid_size: int = 64

    # Restoration
    omega: float = 2.75
    background_sigma_coefficient: float = 0.3
    cg_rtol: float = 1e-8
    cg_maxiter: int = 20000

    # Corruption
    noise_mixture: tuple[float, float, float] = (0.8, 0.15, 0.05)

    # Evaluation
    psnr_cap: float = 300.0


settings = Settings()


def get_settings() -> Settings:
    """Re-read the environment; commands call this once at start"""
    return Settings()
