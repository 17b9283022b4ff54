import numpy as np
import pytest

from rltc.model.config import ModelConfig
from rltc.model.params import ModelParams


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# vocab 16 keeps finite-difference checks fast; ids must stay below 16
TINY_GRAD_CONFIG = ModelConfig(d_model=8, n_heads=2, n_layers_enc=1, n_layers_dec=1, d_ff=16, vocab=16, max_pos=8, init_std=0.3)

# full byte vocabulary with the smallest useful widths, for codec and trainer tests
TINY_CODEC_CONFIG = ModelConfig(d_model=8, n_heads=2, n_layers_enc=1, n_layers_dec=1, d_ff=16, vocab=260, max_pos=130)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grad_config():
    return TINY_GRAD_CONFIG


@pytest.fixture
def codec_config():
    return TINY_CODEC_CONFIG


@pytest.fixture
def grad_params():
    return ModelParams.initialize(TINY_GRAD_CONFIG, seed=3)


@pytest.fixture
def codec_pair():
    return (
        ModelParams.initialize(TINY_CODEC_CONFIG, seed=11),
        ModelParams.initialize(TINY_CODEC_CONFIG, seed=12),
    )
