"""The 784-16-16-10 MLP: forward pass, backpropagation, clipping, batched updates.

Layer sizes are carried by the parameter arrays themselves, so the same code
serves the full network and the small instances used by gradient checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .math_core import Prng, affine, he_uniform, leaky_relu, leaky_relu_deriv, softmax

LAYER_SIZES = (784, 16, 16, 10)

MODES = ("baseline", "speculative", "shadow")
METRICS = ("linf", "l2")

_PROB_FLOOR = 1e-12


@dataclass
class NetworkParams:
    """Weight matrices and bias vectors; W row r feeds output neuron r."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    @property
    def layer_sizes(self) -> tuple[int, int, int, int]:
        return (self.W1.shape[1], self.W1.shape[0], self.W2.shape[0], self.W3.shape[0])

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.W1, self.b1, self.W2, self.b2, self.W3, self.b3)

    def copy(self) -> "NetworkParams":
        return NetworkParams(*(a.copy() for a in self.arrays()))


@dataclass
class GradientSet:
    """Per-parameter gradients, shape-congruent with NetworkParams."""

    dW1: np.ndarray
    db1: np.ndarray
    dW2: np.ndarray
    db2: np.ndarray
    dW3: np.ndarray
    db3: np.ndarray

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.dW1, self.db1, self.dW2, self.db2, self.dW3, self.db3)

    def copy(self) -> "GradientSet":
        return GradientSet(*(a.copy() for a in self.arrays()))

    @classmethod
    def zeros_like(cls, params: NetworkParams) -> "GradientSet":
        return cls(*(np.zeros_like(a) for a in params.arrays()))


@dataclass
class ForwardTrace:
    """Everything backprop needs from one forward pass."""

    x: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    z3: np.ndarray
    probs: np.ndarray

    def validate(self, tol: float = 1e-6) -> None:
        assert np.array_equal(self.a1, leaky_relu(self.z1))
        assert np.array_equal(self.a2, leaky_relu(self.z2))
        # float32 exp underflows to exact 0 for logits ~90 below the max,
        # so nonnegativity (not strict positivity) is the invariant here
        assert np.all(self.probs >= 0)
        assert abs(float(self.probs.sum()) - 1.0) <= tol


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 15
    clip_bound: float = 5.0
    threshold: float = 0.25
    epochs: int = 10
    seed: int = 42
    mode: str = "baseline"
    metric: str = "linf"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.clip_bound <= 0:
            raise ValueError("clip_bound must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")


def init_params(seed: int, layer_sizes: tuple[int, int, int, int] = LAYER_SIZES) -> NetworkParams:
    """He-style uniform weights in [-sqrt(6/fan_in), +sqrt(6/fan_in)], biases zero.

    One Prng(seed) stream is consumed for W1 (row-major), then W2, then W3;
    zero biases consume no draws. Same seed gives bit-identical parameters.
    """
    n_in, n_h1, n_h2, n_out = layer_sizes
    rng = Prng(seed)
    return NetworkParams(
        W1=he_uniform(rng, (n_h1, n_in), n_in),
        b1=np.zeros(n_h1, dtype=np.float32),
        W2=he_uniform(rng, (n_h2, n_h1), n_h1),
        b2=np.zeros(n_h2, dtype=np.float32),
        W3=he_uniform(rng, (n_out, n_h2), n_h2),
        b3=np.zeros(n_out, dtype=np.float32),
    )


def forward(params: NetworkParams, x: np.ndarray) -> ForwardTrace:
    """Full forward pass, retaining per-layer pre-activations for backprop."""
    z1 = affine(params.W1, x, params.b1)
    a1 = leaky_relu(z1)
    z2 = affine(params.W2, a1, params.b2)
    a2 = leaky_relu(z2)
    z3 = affine(params.W3, a2, params.b3)
    return ForwardTrace(x=x, z1=z1, a1=a1, z2=z2, a2=a2, z3=z3, probs=softmax(z3))


def backward(params: NetworkParams, trace: ForwardTrace, label: int) -> GradientSet:
    """Cross-entropy gradients for every weight and bias; output is unclipped."""
    n_out = params.b3.shape[0]
    if not 0 <= label < n_out:
        raise ValueError(f"label {label} out of range 0..{n_out - 1}")
    d3 = trace.probs.copy()
    d3[label] -= d3.dtype.type(1)
    d2 = (params.W3.T @ d3) * leaky_relu_deriv(trace.z2)
    d1 = (params.W2.T @ d2) * leaky_relu_deriv(trace.z1)
    return GradientSet(
        dW1=np.outer(d1, trace.x),
        db1=d1,
        dW2=np.outer(d2, trace.a1),
        db2=d2,
        dW3=np.outer(d3, trace.a2),
        db3=d3,
    )


def clip(g: GradientSet, bound: float) -> GradientSet:
    """Elementwise bound to [-bound, +bound]; returns a new GradientSet."""
    if bound <= 0:
        raise ValueError("clip bound must be positive")
    out = []
    for a in g.arrays():
        c = np.minimum(a, a.dtype.type(bound))
        np.maximum(c, a.dtype.type(-bound), out=c)
        out.append(c)
    return GradientSet(*out)


def accumulate(acc: GradientSet, g: GradientSet) -> GradientSet:
    """Elementwise sum of g into acc (in place); returns acc."""
    for a, b in zip(acc.arrays(), g.arrays()):
        a += b
    return acc


def apply_update(params: NetworkParams, acc: GradientSet, cfg: TrainConfig, n_samples: int) -> NetworkParams:
    """param -= learning_rate * (acc / n_samples), in place; caller resets acc."""
    if n_samples == 0:
        raise ValueError("apply_update needs at least one accumulated sample")
    scale = np.float32(cfg.learning_rate / n_samples)
    for p, a in zip(params.arrays(), acc.arrays()):
        p -= a * scale
    return params


def loss(probs: np.ndarray, label: int) -> float:
    """Cross-entropy -ln(probs[label]), with the probability floored at 1e-12."""
    return float(-np.log(max(float(probs[label]), _PROB_FLOOR)))


def evaluate(params: NetworkParams, test) -> float:
    """Fraction of samples with argmax(probs) == label; ties break to the lowest index."""
    if not test:
        raise ValueError("evaluate needs a non-empty sample list")
    correct = 0
    for sample in test:
        probs = forward(params, sample.pixels).probs
        if int(np.argmax(probs)) == sample.label:
            correct += 1
    return correct / len(test)
