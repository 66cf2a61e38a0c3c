"""Deterministic numeric kernels: activations, affine transform, softmax, seeded RNG.

Training math runs in float32; tests that need a higher-precision reference
build their own float64 path.
"""
from __future__ import annotations

import numpy as np

LEAK = 0.01

_MASK64 = (1 << 64) - 1


class Prng:
    """SplitMix64 generator: portable, identical stream for a seed on every platform.

    Single-owner mutable state; never share one instance between threads.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform draw in [lo, hi): top 53 bits of the next output, scaled."""
        u = (self.next_u64() >> 11) * 2.0 ** -53
        return lo + u * (hi - lo)

    def below(self, n: int) -> int:
        """Uniform-ish integer in [0, n) (modulo reduction; bias is negligible
        for the index ranges used here and keeps the draw count per call fixed)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n


def leaky_relu(x):
    """x for x > 0, else LEAK*x. Elementwise on arrays, dtype-preserving;
    the exact identity max(x, LEAK*x) avoids a branch."""
    return np.maximum(x, np.multiply(x, LEAK))


def leaky_relu_deriv(x):
    """1 for x > 0, else LEAK (the value at exactly 0 is LEAK by convention)."""
    arr = np.asarray(x)
    if arr.dtype.kind == "f":
        return np.where(arr > 0, arr.dtype.type(1), arr.dtype.type(LEAK))
    return np.where(arr > 0, 1.0, LEAK)


def affine(W: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """W @ x + b; row r of W feeds output r."""
    if W.ndim != 2 or x.ndim != 1 or b.ndim != 1:
        raise ValueError(f"affine expects matrix/vector/vector, got {W.ndim}/{x.ndim}/{b.ndim}-d")
    if W.shape[1] != x.shape[0] or W.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: W {W.shape}, x {x.shape}, b {b.shape}")
    return W @ x + b


def softmax(v: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtracted unconditionally)."""
    e = np.exp(v - v.max())
    return e / e.sum()


def he_uniform(prng: Prng, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """float32 array with entries uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)],
    consumed from `prng` in row-major order."""
    bound = (6.0 / fan_in) ** 0.5
    out = np.empty(shape, dtype=np.float32)
    flat = out.reshape(-1)
    for i in range(flat.shape[0]):
        flat[i] = prng.uniform(-bound, bound)
    return out


def shuffle(indices: list[int], prng: Prng) -> list[int]:
    """Fisher-Yates permutation of a copy of `indices`, driven by `prng`."""
    out = list(indices)
    for i in range(len(out) - 1, 0, -1):
        j = prng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
