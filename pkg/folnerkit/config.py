import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

import tomli
from pydantic import BaseModel, Field


class LimitsConfig(BaseModel):
    """Hard caps for exact desk-scale work"""
    window_cap: int = Field(default=100_000, gt=0)
    lp_support_cap: int = Field(default=200, gt=0)
    denominator_cap: int = Field(default=1000, gt=0)
    backtrack_steps: int = Field(default=10_000, gt=0)
    closure_points_cap: int = Field(default=8, gt=0)


class RunConfig(BaseModel):
    """Per-run defaults, overridable from the command line"""
    workers: int = Field(default=1, gt=0)
    seed: int = 0
    budget: int = Field(default=500, gt=0)
    out_dir: str = "out"
    log_level: str = "INFO"


class Config(BaseModel):
    limits: LimitsConfig = LimitsConfig()
    run: RunConfig = RunConfig()

    @classmethod
    def locate(cls) -> Optional[Path]:
        """Find config.toml: $FOLNERKIT_CONFIG, then the working directory, then the repo root."""
        env_path = os.environ.get("FOLNERKIT_CONFIG")
        if env_path:
            return Path(env_path)
        for candidate in (Path.cwd() / "config.toml", Path(__file__).resolve().parents[1] / "config.toml"):
            if candidate.exists():
                return candidate
        return None

    @classmethod
    def load_config(cls, config_path: Optional[Path] = None) -> "Config":
        """Load config.toml; missing file means defaults"""
        config_path = config_path or cls.locate()
        if config_path is None:
            return cls()
        if not config_path.exists():
            raise RuntimeError(f"Config file not found at {config_path}")

        try:
            with open(config_path, "rb") as f:
                toml_config = tomli.load(f)
            return cls(
                limits=LimitsConfig(**toml_config.get("limits", {})),
                run=RunConfig(**toml_config.get("run", {})),
            )
        except Exception as e:
            raise RuntimeError(f"Failed to load config.toml: {e}")


@lru_cache(maxsize=1)
def get_config() -> Config:
    return Config.load_config()


def limits() -> LimitsConfig:
    return get_config().limits


def override(**run_values) -> Config:
    """Apply command-line overrides to the cached run settings."""
    config = get_config()
    for key, value in run_values.items():
        if value is not None:
            setattr(config.run, key, value)
    return config
