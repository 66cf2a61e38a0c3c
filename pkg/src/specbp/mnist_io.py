"""MNIST IDX container parsing and pixel normalization.

Files are read fully into memory; the training loop needs random access for
shuffling and the whole train split is only ~47 MB.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
NUM_CLASSES = 10
IMAGE_SIDE = 28
PIXELS = IMAGE_SIDE * IMAGE_SIDE


class IdxFormatError(ValueError):
    """Malformed IDX container: bad magic or payload shorter than the header promises."""


@dataclass(frozen=True)
class ImageSample:
    """One normalized sample: 784 unit-interval float32 pixels plus its class id."""

    pixels: np.ndarray
    label: int


def parse_idx_images(data: bytes) -> np.ndarray:
    """Parse an IDX3-ubyte image container into a (n, rows, cols) uint8 array."""
    if len(data) < 16:
        raise IdxFormatError(f"image header needs 16 bytes, got {len(data)}")
    magic, n, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")
    expected = n * rows * cols
    payload = len(data) - 16
    if payload < expected:
        raise IdxFormatError(f"truncated image payload: header promises {expected} bytes, got {payload}")
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=16).reshape(n, rows, cols)


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Parse an IDX1-ubyte label container into a (n,) uint8 array of class ids."""
    if len(data) < 8:
        raise IdxFormatError(f"label header needs 8 bytes, got {len(data)}")
    magic, n = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")
    payload = len(data) - 8
    if payload < n:
        raise IdxFormatError(f"truncated label payload: header promises {n} bytes, got {payload}")
    labels = np.frombuffer(data, dtype=np.uint8, count=n, offset=8)
    if labels.size and labels.max() >= NUM_CLASSES:
        bad = int(labels.max())
        raise ValueError(f"label {bad} out of range 0..{NUM_CLASSES - 1}")
    return labels


def images_to_idx_bytes(grids: np.ndarray) -> bytes:
    """Serialize (n, rows, cols) uint8 grids back into IDX3-ubyte bytes."""
    n, rows, cols = grids.shape
    return struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols) + grids.tobytes()


def labels_to_idx_bytes(labels: np.ndarray) -> bytes:
    """Serialize (n,) class ids back into IDX1-ubyte bytes."""
    return struct.pack(">II", LABEL_MAGIC, len(labels)) + bytes(bytearray(labels))


def normalize(grid: np.ndarray) -> np.ndarray:
    """Flatten a 28x28 byte grid row-major and scale pixels to [0, 1] by /255."""
    grid = np.asarray(grid)
    if grid.shape != (IMAGE_SIDE, IMAGE_SIDE):
        raise ValueError(f"expected {IMAGE_SIDE}x{IMAGE_SIDE} grid, got {grid.shape}")
    return grid.reshape(PIXELS).astype(np.float32) / np.float32(255)


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.decompress(path.read_bytes())
    return path.read_bytes()


def _load_split(images_path, labels_path) -> list[ImageSample]:
    grids = parse_idx_images(_read_bytes(images_path))
    labels = parse_idx_labels(_read_bytes(labels_path))
    if grids.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{grids.shape[0]} images in {images_path} but {labels.shape[0]} labels in {labels_path}"
        )
    if grids.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
        raise ValueError(f"expected {IMAGE_SIDE}x{IMAGE_SIDE} images, got {grids.shape[1:]}")
    # One contiguous normalized matrix; each sample keeps a row view of it.
    pixels = grids.reshape(len(grids), PIXELS).astype(np.float32) / np.float32(255)
    pixels.setflags(write=False)
    return [ImageSample(pixels[i], int(labels[i])) for i in range(len(labels))]


def load_dataset(
    train_images_path, train_labels_path, test_images_path, test_labels_path
) -> tuple[list[ImageSample], list[ImageSample]]:
    """Load and normalize the train and test splits from four IDX files.

    Paths ending in .gz are decompressed transparently. Image/label count
    mismatches raise ValueError; unreadable paths raise OSError.
    """
    train = _load_split(train_images_path, train_labels_path)
    test = _load_split(test_images_path, test_labels_path)
    return train, test
