import sys
from pathlib import Path

import pytest
from loguru import logger

from folnerkit.config import get_config

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(autouse=True)
def fresh_config():
    """Command-line overrides and log sinks are process-wide; reset them per test."""
    get_config.cache_clear()
    yield
    get_config.cache_clear()
    logger.remove()
    logger.add(sys.stderr, level="WARNING")


@pytest.fixture
def scenario_dir() -> Path:
    return ROOT / "scenarios"


@pytest.fixture
def write_scenario(tmp_path):
    def write(name: str, text: str) -> Path:
        path = tmp_path / f"{name}.toml"
        path.write_text(text, encoding="utf-8")
        return path
    return write
