"""Per-label gradient cache and the hit/miss resolution at the core of
speculative backpropagation.

A resolution either reuses the cached gradients for the sample's label (hit:
the current output lies within the threshold distance of the cached output)
or falls back to a standard backward pass and refreshes the slot (miss).
Cached gradient arrays are frozen (read-only) when stored, so a hit can hand
back a reference without risking mutation of the cache.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import GradientSet, NetworkParams, ForwardTrace, backward, clip

LINF = "linf"
L2 = "l2"


def output_distance(a: np.ndarray, b: np.ndarray, metric: str = LINF) -> float:
    """Distance between two output-probability vectors.

    linf (default): max|a_i - b_i|, bounded in [0, 1] for softmax outputs.
    l2: Euclidean norm of the difference, provided for sensitivity runs.
    """
    if metric == LINF:
        return float(np.max(np.abs(a - b)))
    if metric == L2:
        d = a - b
        return float(np.sqrt(np.dot(d, d)))
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class CacheEntry:
    """Output vector and clipped gradients from the backward pass that produced them."""

    output: np.ndarray
    grads: GradientSet
    label: int  # slot-purity tag: which class produced these gradients


class GradientCache:
    """One optional CacheEntry per class label; entries persist across epochs."""

    def __init__(self, n_classes: int = 10):
        self.slots: list[CacheEntry | None] = [None] * n_classes

    def __len__(self) -> int:
        return sum(1 for s in self.slots if s is not None)

    def entry(self, label: int) -> CacheEntry | None:
        return self.slots[label]

    def lookup(self, probs: np.ndarray, label: int, threshold: float, metric: str = LINF):
        """Hit/miss decision only; never mutates the cache.

        Returns (hit, distance); distance is None when the slot is cold.
        """
        entry = self.slots[label]
        if entry is None:
            return False, None
        d = output_distance(probs, entry.output, metric)
        return d <= threshold, d

    def store(self, label: int, probs: np.ndarray, grads: GradientSet) -> None:
        """Overwrite the label's slot. Arrays are frozen so later hits can

        safely return references into the cache."""
        output = probs.copy()
        output.setflags(write=False)
        for a in grads.arrays():
            a.setflags(write=False)
        self.slots[label] = CacheEntry(output=output, grads=grads, label=label)


@dataclass
class Resolution:
    """Outcome of resolving one sample: the gradients to accumulate, whether
    they were reused, and the output distance (None on a cold miss)."""

    grads: GradientSet
    hit: bool
    distance: float | None


def resolve(
    cache: GradientCache,
    params: NetworkParams,
    trace: ForwardTrace,
    label: int,
    threshold: float,
    clip_bound: float = 5.0,
    metric: str = LINF,
) -> Resolution:
    """Resolve one sample against the cache.

    Hit (cached output within threshold): return the cached gradients; the
    cache is left untouched. Miss (cold slot, or distance above threshold):
    run a standard backward pass, clip, overwrite the slot, and return the
    fresh gradients.
    """
    if not 0 <= label < len(cache.slots):
        raise ValueError(f"label {label} out of range 0..{len(cache.slots) - 1}")
    hit, distance = cache.lookup(trace.probs, label, threshold, metric)
    if hit:
        return Resolution(grads=cache.slots[label].grads, hit=True, distance=distance)
    grads = clip(backward(params, trace, label), clip_bound)
    cache.store(label, trace.probs, grads)
    return Resolution(grads=grads, hit=False, distance=distance)


def hit_rate(hits: int, total: int) -> float:
    """hits / total; raises on an empty denominator."""
    if total <= 0:
        raise ValueError("hit rate needs at least one resolution")
    return hits / total


def count_hits_at(distances, threshold: float) -> int:
    """Would-be hit count for a threshold over a recorded distance stream.

    Cold-miss entries are encoded as NaN and never count as hits, matching
    live behavior where an empty slot always misses.
    """
    d = np.asarray(distances, dtype=np.float64)
    return int(np.count_nonzero(d <= threshold))
