import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv


@dataclass(frozen=True)
class Settings:
    max_jobs: int
    log_dir: Path
    output_dir: Path
    dd_max_n: int
    max_pivots: int
    log_enabled: bool


def get_settings() -> Settings:
    """Read settings from the environment, merging a local .env file first."""
    load_dotenv()
    return Settings(
        max_jobs=int(os.getenv('FNEF_MAX_JOBS', '1')),
        log_dir=Path(os.getenv('FNEF_LOG_DIR', 'data/logs')),
        output_dir=Path(os.getenv('FNEF_OUTPUT_DIR', 'data/output')),
        dd_max_n=int(os.getenv('FNEF_DD_MAX_N', '7')),
        max_pivots=int(os.getenv('FNEF_MAX_PIVOTS', '100000')),
        log_enabled=os.getenv('FNEF_LOG_ENABLED', '1') != '0',
    )
