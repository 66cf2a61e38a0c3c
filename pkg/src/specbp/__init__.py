"""Speculative backpropagation trainer for a small MNIST MLP.

Caches per-label gradients and reuses them whenever the current network
output lands close enough to a cached one, overlapping the next forward
pass with the reuse decision instead of computing a fresh backward pass.
"""
from .executor import (
    EpochRecord,
    RunReport,
    ShadowResult,
    params_digest,
    train_baseline,
    train_shadow,
    train_speculative,
)
from .math_core import Prng, affine, he_uniform, leaky_relu, leaky_relu_deriv, shuffle, softmax
from .mnist_io import ImageSample, IdxFormatError, load_dataset, normalize, parse_idx_images, parse_idx_labels
from .network import (
    LAYER_SIZES,
    ForwardTrace,
    GradientSet,
    NetworkParams,
    TrainConfig,
    accumulate,
    apply_update,
    backward,
    clip,
    evaluate,
    forward,
    init_params,
    loss,
)
from .speculation import (
    CacheEntry,
    GradientCache,
    Resolution,
    count_hits_at,
    hit_rate,
    output_distance,
    resolve,
)

__all__ = [
    "EpochRecord",
    "RunReport",
    "ShadowResult",
    "params_digest",
    "train_baseline",
    "train_shadow",
    "train_speculative",
    "Prng",
    "affine",
    "he_uniform",
    "leaky_relu",
    "leaky_relu_deriv",
    "shuffle",
    "softmax",
    "ImageSample",
    "IdxFormatError",
    "load_dataset",
    "normalize",
    "parse_idx_images",
    "parse_idx_labels",
    "LAYER_SIZES",
    "ForwardTrace",
    "GradientSet",
    "NetworkParams",
    "TrainConfig",
    "accumulate",
    "apply_update",
    "backward",
    "clip",
    "evaluate",
    "forward",
    "init_params",
    "loss",
    "CacheEntry",
    "GradientCache",
    "Resolution",
    "count_hits_at",
    "hit_rate",
    "output_distance",
    "resolve",
]

__version__ = "0.1.0"
