from pathlib import Path

import pytest

from unipredict.config import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

CLASS_ENVS = ["singleton", "det-pair", "det-family-4", "bernoulli-pair", "bernoulli-grid", "mixed"]


def load_env(name):
    return load_config(CONFIGS / f"{name}.yaml")


@pytest.fixture(params=CLASS_ENVS)
def env(request):
    return load_env(request.param)


@pytest.fixture
def configs_dir():
    return CONFIGS
