import os
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]


def mnist_dir() -> Path:
    """Locate the MNIST IDX files: env override, else the vendored copies."""
    env = os.environ.get("STRETCHNN_MNIST_DIR")
    if env:
        return Path(env)
    return REPO_ROOT / "data" / "mnist"


@pytest.fixture(scope="session")
def mnist_path() -> Path:
    path = mnist_dir()
    if not (path / "train-images-idx3-ubyte").exists() and not (
        path / "train-images-idx3-ubyte.gz"
    ).exists():
        pytest.fail(
            f"MNIST IDX files not found in {path}; set STRETCHNN_MNIST_DIR "
            "or restore data/mnist/"
        )
    return path


@pytest.fixture(scope="session")
def dataset(mnist_path):
    from stretchnn.dataset import Dataset

    return Dataset.from_mnist_dir(mnist_path)


@pytest.fixture(scope="session")
def trained_params(dataset):
    """One default training run shared by every test that needs weights."""
    from stretchnn.network import TrainConfig, train_sgd

    params, curve = train_sgd(dataset, TrainConfig())
    return params, curve


def random_envelope(seed: int, n: int = 4096, span: float = 20e-9):
    from stretchnn.signal_core import SampledEnvelope, TimeGrid

    rng = np.random.default_rng(seed)
    grid = TimeGrid.centered(n, span)
    samples = rng.normal(size=n) + 1j * rng.normal(size=n)
    return SampledEnvelope(grid, samples)
