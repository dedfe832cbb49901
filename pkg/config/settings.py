from pathlib import Path
from typing import List, Optional
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide defaults for the Monge solver."""

    # Project paths
    BASE_DIR: Path = Path(__file__).parent.parent
    CONFIG_DIR: Path = BASE_DIR / "config"
    DEFAULT_CONFIG: Path = CONFIG_DIR / "default.toml"
    OUT_DIR: Path = Field(
        default=Path("runs"),
        description="Default output directory (override with MONGE_OUT_DIR)"
    )

    # Runtime
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = Field(
        default=None,
        description="Optional log file name, created inside the output directory"
    )
    THREADS: int = Field(default=1, ge=1, description="Workers for cost-row computation")
    SHOW_PROGRESS: bool = True

    # Cost rows
    ROW_CACHE_SIZE: int = 4096  # rows kept in the LRU cache
    DENSE_NODE_LIMIT: int = 2048  # full n x n matrices only up to this many nodes
    ROW_CHUNK: int = 256  # sources per dijkstra call

    # Verification sampling
    TRIPLE_SAMPLES: int = 100_000
    PAIR_SAMPLES: int = 100_000
    QUADRUPLE_SAMPLES: int = 10_000
    ORACLE_SEEDS: int = 50
    ENERGY_EDGES: int = 1000
    MAP_ATOMS: int = 8  # equal atoms per side in the permutation check
    CRITICAL_SIDE: int = 8  # torus side for the closed-form critical value check
    REFINEMENT_SIDES: List[int] = Field(default_factory=lambda: [16, 32, 64])

    model_config = SettingsConfigDict(
        env_prefix="MONGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    def ensure_out_dir(self, out_dir: Optional[Path] = None) -> Path:
        """Create the output directory if it doesn't exist."""
        directory = Path(out_dir or self.OUT_DIR)
        directory.mkdir(parents=True, exist_ok=True)
        return directory


# Global settings instance
settings = Settings()
