"""
Pytest configuration and fixtures for advdal tests.

This module provides shared test fixtures:
- Isolated temporary directories and a clean ``ADVDAL_*`` environment
- Hand-built networks with known decision boundaries
- Small synthetic datasets and experiment configuration files
"""
import os
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest

from advdal.lib.datasets import Dataset, split, synthetic_blobs
from advdal.lib.network import MlpModel


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(autouse=True)
def clean_environment():
    """Remove ADVDAL_* variables for the duration of each test."""
    original_env = {}
    advdal_vars = [var for var in os.environ if var.startswith("ADVDAL_")]

    for var in advdal_vars:
        original_env[var] = os.environ[var]
        del os.environ[var]

    yield

    for var in [var for var in os.environ if var.startswith("ADVDAL_")]:
        del os.environ[var]
    for var, value in original_env.items():
        os.environ[var] = value


def make_boundary_model() -> MlpModel:
    """Two inputs, two classes: class 1 iff x[0] > 0.5; x[1] is ignored.

    Hidden units compute relu(x0) and relu(1 - x0), so on [0, 1]
    logits are ``(1 - x0, x0)``.
    """
    return MlpModel(
        W1=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        b1=np.array([0.0, 1.0]),
        W2=np.array([[0.0, 1.0], [1.0, 0.0]]),
        b2=np.zeros(2),
    )


def random_model(seed: int, input_dim: int = 2, hidden_dim: int = 4, num_classes: int = 3) -> MlpModel:
    """Seeded network with standard-normal weights, large enough to have unstable neurons."""
    rng = np.random.default_rng(seed)
    return MlpModel(
        W1=rng.normal(size=(hidden_dim, input_dim)),
        b1=rng.normal(scale=0.5, size=hidden_dim),
        W2=rng.normal(size=(num_classes, hidden_dim)),
        b2=rng.normal(scale=0.1, size=num_classes),
    )


@pytest.fixture
def boundary_model() -> MlpModel:
    return make_boundary_model()


@pytest.fixture
def zero_model() -> MlpModel:
    """Constant classifier: every logit is 0, so every input predicts class 0."""
    return MlpModel.zeros(2, 3, 2)


@pytest.fixture
def blobs() -> Dataset:
    return synthetic_blobs(seed=0, n=120, input_dim=4, num_classes=3, spread=0.05)


@pytest.fixture
def blobs_split(blobs):
    return split(blobs, 0.25, seed=0)


SMOKE_CONFIG = """# smoke experiment on synthetic blobs
dataset.kind = blobs
dataset.blobs_n = 120
dataset.blobs_dim = 3
dataset.blobs_classes = 3
experiment.strategies = random, fvaal
experiment.augmentations = none, fv_adv
experiment.rounds = 2
experiment.n_init = 6
experiment.n_query = 4
experiment.n_sub = 20
experiment.n_adv = 2
experiment.runs = 2
experiment.workers = 1
model.hidden_dim = 6
train.epochs = 3
harvest.time_limit = 2.0
harvest.node_limit = 200
"""


@pytest.fixture
def smoke_config(temp_dir: Path) -> Path:
    """A tiny two-strategy, two-augmentation blobs experiment."""
    path = temp_dir / "smoke.conf"
    path.write_text(SMOKE_CONFIG)
    return path
