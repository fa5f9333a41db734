"""
Shared pytest fixtures. Also anchors the rootdir so ``src`` imports resolve.

Acceptance-scale tests are marked ``slow`` and run only with FAKESPAN_RUN_SLOW=1.
"""
import os

import numpy as np
import pytest

from src.data import Dataset
from src.models import EvalConfig, ModelConfig, RunConfig, SyntheticConfig, TrainConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale test, enabled by FAKESPAN_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("FAKESPAN_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set FAKESPAN_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def toy_model_config():
    return ModelConfig.toy()


@pytest.fixture
def toy_synthetic_config():
    return SyntheticConfig(
        n_samples=12, t=32, d=4, latent_dim=2, fake_duration_s=(0.2, 0.4), seed=3,
    )


@pytest.fixture
def toy_eval_config():
    return EvalConfig(max_len=32)


@pytest.fixture
def toy_train_config():
    return TrainConfig(max_epochs=2, batch_size=4, plateau_patience=1, early_stop_patience=2)


@pytest.fixture
def toy_run_config(tmp_path, toy_model_config, toy_synthetic_config, toy_eval_config, toy_train_config):
    return RunConfig(
        model=toy_model_config,
        synthetic=toy_synthetic_config,
        eval=toy_eval_config,
        train=toy_train_config,
        paths={"out_dir": str(tmp_path / "run")},
    )


@pytest.fixture
def toy_dataset(toy_synthetic_config):
    return Dataset.synthetic(toy_synthetic_config, range(8), name="toy")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
