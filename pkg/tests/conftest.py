"""Shared fixtures: MNIST location and one session-wide load of the real data."""
import os
from pathlib import Path

import pytest

from specbp.mnist_io import load_dataset


def mnist_dir() -> Path | None:
    """First directory that holds the four IDX files (plain or gzipped).

    Checked in order: $SPECBP_MNIST_DIR, <repo>/data/mnist, /root/data/mnist.
    """
    candidates = []
    env = os.environ.get("SPECBP_MNIST_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "mnist")
    candidates.append(Path("/root/data/mnist"))
    for cand in candidates:
        if (cand / "train-images-idx3-ubyte").exists() or (
            cand / "train-images-idx3-ubyte.gz"
        ).exists():
            return cand
    return None


@pytest.fixture(scope="session")
def mnist_data_dir() -> Path:
    d = mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not found; set SPECBP_MNIST_DIR")
    return d


@pytest.fixture(scope="session")
def mnist(mnist_data_dir):
    """(train, test) sample lists for the real dataset, loaded once."""
    from specbp.cli import resolve_data_paths

    return load_dataset(*resolve_data_paths(mnist_data_dir))
