"""Synthetic dataset builders shared across test modules."""
import numpy as np

from specbp.mnist_io import ImageSample, images_to_idx_bytes, labels_to_idx_bytes, normalize


def synth_samples(n, seed=0):
    """n random ImageSamples with every class present when n >= 10."""
    rng = np.random.default_rng(seed)
    grids = rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)
    labels = np.concatenate([np.arange(min(n, 10)), rng.integers(0, 10, size=max(n - 10, 0))])
    rng.shuffle(labels)
    return [ImageSample(normalize(grids[i]), int(labels[i])) for i in range(n)]


def write_idx_dataset(dirpath, n_train=90, n_test=30, seed=0):
    """Drop a tiny four-file IDX dataset into dirpath using the standard names."""
    rng = np.random.default_rng(seed)
    for prefix, n in (("train", n_train), ("t10k", n_test)):
        grids = rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)
        labels = rng.integers(0, 10, size=n).astype(np.uint8)
        (dirpath / f"{prefix}-images-idx3-ubyte").write_bytes(images_to_idx_bytes(grids))
        (dirpath / f"{prefix}-labels-idx1-ubyte").write_bytes(labels_to_idx_bytes(labels))
