from pathlib import Path

import pytest

from tsdyn.config import load_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture(scope="session")
def cfg_z():
    return load_config(CONFIG_DIR / "example_z.toml")


@pytest.fixture(scope="session")
def cfg_r():
    return load_config(CONFIG_DIR / "example_r.toml")
