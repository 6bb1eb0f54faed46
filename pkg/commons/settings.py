import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# .env values never override variables already exported in the shell
load_dotenv(override=False)


class Settings(BaseModel):
    """
    Process wide defaults read from the environment (or a .env file in the working directory).

    Attributes:
        log_level (str): loguru level, RENYI_LOG_LEVEL.
        workers (int): joblib workers used by the simulation harness, RENYI_WORKERS.
        output_dir (str): default directory for reports, RENYI_OUTPUT_DIR.
        seed (int): default 64-bit seed when the CLI gets no --seed, RENYI_SEED.
    """

    log_level: str = "INFO"
    workers: int = Field(default=1, ge=1)
    output_dir: str = "."
    seed: int = Field(default=20240101, ge=0, lt=2**64)


def get_settings() -> Settings:
    return Settings(
        log_level=os.getenv("RENYI_LOG_LEVEL", "INFO"),
        workers=int(os.getenv("RENYI_WORKERS", "1")),
        output_dir=os.getenv("RENYI_OUTPUT_DIR", "."),
        seed=int(os.getenv("RENYI_SEED", "20240101")),
    )
