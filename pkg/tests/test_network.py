"""MLP forward/backward math, clipping, batched updates, evaluation."""
import math

import numpy as np
import pytest

from helpers import synth_samples
from specbp.math_core import Prng
from specbp.network import (
    LAYER_SIZES,
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


def _zero_params(sizes=LAYER_SIZES, dtype=np.float32):
    n_in, h1, h2, n_out = sizes
    return NetworkParams(
        W1=np.zeros((h1, n_in), dtype=dtype),
        b1=np.zeros(h1, dtype=dtype),
        W2=np.zeros((h2, h1), dtype=dtype),
        b2=np.zeros(h2, dtype=dtype),
        W3=np.zeros((n_out, h2), dtype=dtype),
        b3=np.zeros(n_out, dtype=dtype),
    )


def _to_float64(p):
    return NetworkParams(*(a.astype(np.float64) for a in p.arrays()))


def test_init_params_shapes_and_dtype():
    p = init_params(0)
    assert p.W1.shape == (16, 784) and p.W2.shape == (16, 16) and p.W3.shape == (10, 16)
    assert all(a.dtype == np.float32 for a in p.arrays())
    assert p.layer_sizes == LAYER_SIZES


def test_init_params_deterministic_and_seed_sensitive():
    a, b = init_params(42), init_params(42)
    for x, y in zip(a.arrays(), b.arrays()):
        np.testing.assert_array_equal(x, y)
    c = init_params(43)
    assert not np.array_equal(a.W1, c.W1)


def test_init_params_he_bounds_and_zero_biases():
    p = init_params(7)
    for W, fan_in in ((p.W1, 784), (p.W2, 16), (p.W3, 16)):
        assert float(np.abs(W).max()) <= (6.0 / fan_in) ** 0.5
    for b in (p.b1, p.b2, p.b3):
        assert not b.any()


def test_init_params_consumes_prng_in_order():
    """W1 row-major first, then W2, then W3; biases draw nothing."""
    p = init_params(42)
    rng = Prng(42)
    bound1 = (6.0 / 784) ** 0.5
    assert p.W1[0, 0] == np.float32(rng.uniform(-bound1, bound1))
    for _ in range(16 * 784 - 1):
        rng.next_u64()
    bound2 = (6.0 / 16) ** 0.5
    assert p.W2[0, 0] == np.float32(rng.uniform(-bound2, bound2))


def test_forward_zero_params_is_uniform():
    p = _zero_params()
    trace = forward(p, np.zeros(784, dtype=np.float32))
    np.testing.assert_array_equal(trace.probs, np.full(10, np.float32(0.1)))


def test_forward_trace_consistency():
    p = init_params(1)
    x = synth_samples(1, seed=4)[0].pixels
    trace = forward(p, x)
    trace.validate()
    assert trace.x is x
    assert trace.probs.shape == (10,)
    assert trace.z1.shape == (16,) and trace.z2.shape == (16,) and trace.z3.shape == (10,)


def test_forward_matches_float64_straight_line():
    """float32 forward agrees with an independently coded float64 pass."""
    p = init_params(42)
    x = synth_samples(1, seed=9)[0].pixels

    def ref(p, x):
        x = x.astype(np.float64)
        z1 = p.W1.astype(np.float64) @ x + p.b1.astype(np.float64)
        a1 = np.where(z1 > 0, z1, 0.01 * z1)
        z2 = p.W2.astype(np.float64) @ a1 + p.b2.astype(np.float64)
        a2 = np.where(z2 > 0, z2, 0.01 * z2)
        z3 = p.W3.astype(np.float64) @ a2 + p.b3.astype(np.float64)
        e = np.exp(z3 - z3.max())
        return z1, a1, z2, a2, z3, e / e.sum()

    z1, a1, z2, a2, z3, probs = ref(p, x)
    trace = forward(p, x)
    np.testing.assert_allclose(trace.z1, z1, atol=1e-5)
    np.testing.assert_allclose(trace.a2, a2, atol=1e-5)
    np.testing.assert_allclose(trace.probs, probs, atol=1e-5)


def test_backward_output_delta_identity():
    p = init_params(3)
    x = synth_samples(1, seed=3)[0].pixels
    trace = forward(p, x)
    g = backward(p, trace, 4)
    expect = trace.probs.copy()
    expect[4] -= np.float32(1)
    np.testing.assert_array_equal(g.db3, expect)
    np.testing.assert_array_equal(g.dW3, np.outer(expect, trace.a2))


def test_backward_zero_input_gives_zero_dW1():
    p = init_params(5)
    trace = forward(p, np.zeros(784, dtype=np.float32))
    g = backward(p, trace, 0)
    assert not g.dW1.any()
    assert g.db1.any()  # bias gradient survives a zero input


def test_backward_rejects_bad_label():
    p = init_params(0)
    trace = forward(p, np.zeros(784, dtype=np.float32))
    with pytest.raises(ValueError):
        backward(p, trace, 10)
    with pytest.raises(ValueError):
        backward(p, trace, -1)


def test_backward_matches_finite_differences_small_net():
    """Central differences in float64 on a 6-4-4-3 instance, every coordinate."""
    sizes = (6, 4, 4, 3)
    params = _to_float64(init_params(11, sizes))
    rng = np.random.default_rng(11)
    x = rng.uniform(0.0, 1.0, size=6)
    label = 2
    grads = backward(params, forward(params, x), label)
    h = 1e-5
    for p_arr, g_arr in zip(params.arrays(), grads.arrays()):
        flat_p, flat_g = p_arr.reshape(-1), g_arr.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = -math.log(float(forward(params, x).probs[label]))
            flat_p[i] = orig - h
            down = -math.log(float(forward(params, x).probs[label]))
            flat_p[i] = orig
            fd = (up - down) / (2 * h)
            a = float(flat_g[i])
            # mixed bound: tiny coordinates are judged absolutely, large ones relatively
            assert abs(a - fd) <= 1e-9 + 1e-5 * max(abs(a), abs(fd))


def test_clip_bounds_and_interior():
    g = GradientSet(
        dW1=np.array([[7.0, -7.0]], dtype=np.float32),
        db1=np.array([4.9], dtype=np.float32),
        dW2=np.array([[5.0]], dtype=np.float32),
        db2=np.array([-5.0], dtype=np.float32),
        dW3=np.array([[0.0]], dtype=np.float32),
        db3=np.array([-123.0], dtype=np.float32),
    )
    c = clip(g, 5.0)
    np.testing.assert_array_equal(c.dW1, [[5.0, -5.0]])
    assert c.db1[0] == np.float32(4.9)  # interior untouched
    assert c.dW2[0, 0] == 5.0 and c.db2[0] == -5.0  # boundary kept
    assert c.db3[0] == -5.0
    assert g.dW1[0, 0] == 7.0  # input not mutated


def test_clip_idempotent_and_dtype_preserving():
    rng = np.random.default_rng(1)
    g = GradientSet(*(rng.normal(scale=10, size=(3, 3)).astype(np.float32) for _ in range(6)))
    once = clip(g, 5.0)
    twice = clip(once, 5.0)
    for a, b in zip(once.arrays(), twice.arrays()):
        np.testing.assert_array_equal(a, b)
        assert a.dtype == np.float32
        assert float(np.abs(a).max()) <= 5.0


def test_clip_rejects_nonpositive_bound():
    g = GradientSet.zeros_like(init_params(0))
    with pytest.raises(ValueError):
        clip(g, 0.0)


def test_accumulate_identity_and_sum():
    p = init_params(2)
    acc = GradientSet.zeros_like(p)
    g = GradientSet(*(np.full_like(a, 0.5) for a in p.arrays()))
    out = accumulate(acc, g)
    assert out is acc
    for a in acc.arrays():
        assert np.all(a == np.float32(0.5))
    for _ in range(14):
        accumulate(acc, g)
    for a in acc.arrays():  # 15 halves accumulate exactly in float32
        assert np.all(a == np.float32(7.5))


def test_apply_update_known_value():
    p = init_params(0)
    for a in p.arrays():
        a.fill(1.0)
    acc = GradientSet(*(np.ones_like(a) for a in p.arrays()))
    cfg = TrainConfig(learning_rate=0.01)
    apply_update(p, acc, cfg, n_samples=1)
    for a in p.arrays():
        assert np.all(a == np.float32(1.0) - np.float32(0.01))


def test_apply_update_scales_by_batch_size():
    p = _zero_params(sizes=(2, 2, 2, 2))
    acc = GradientSet(*(np.full_like(a, 2.0) for a in p.arrays()))
    cfg = TrainConfig(learning_rate=0.01, batch_size=4)
    apply_update(p, acc, cfg, n_samples=4)
    for a in p.arrays():
        assert np.all(a == -np.float32(0.01 / 4) * np.float32(2.0))


def test_apply_update_zero_acc_is_noop():
    p = init_params(8)
    snap = p.copy()
    apply_update(p, GradientSet.zeros_like(p), TrainConfig(), n_samples=15)
    for a, b in zip(p.arrays(), snap.arrays()):
        np.testing.assert_array_equal(a, b)


def test_apply_update_rejects_empty_batch():
    p = init_params(0)
    with pytest.raises(ValueError):
        apply_update(p, GradientSet.zeros_like(p), TrainConfig(), n_samples=0)


def test_loss_values():
    probs = np.full(10, 0.1)
    assert loss(probs, 3) == pytest.approx(-math.log(0.1), abs=1e-12)
    sure = np.zeros(10)
    sure[7] = 1.0
    assert loss(sure, 7) == 0.0
    assert loss(sure, 2) == pytest.approx(-math.log(1e-12))  # floored, not inf


def test_evaluate_zero_params_predicts_class_zero():
    """Uniform outputs tie-break to index 0, so accuracy == share of label 0."""
    samples = synth_samples(200, seed=6)
    share = sum(1 for s in samples if s.label == 0) / len(samples)
    assert evaluate(_zero_params(), samples) == pytest.approx(share)


def test_evaluate_single_sample_and_permutation_invariance():
    p = init_params(9)
    samples = synth_samples(40, seed=8)
    acc = evaluate(p, samples)
    assert acc == pytest.approx(evaluate(p, list(reversed(samples))))
    one = evaluate(p, samples[:1])
    assert one in (0.0, 1.0)


def test_evaluate_rejects_empty():
    with pytest.raises(ValueError):
        evaluate(init_params(0), [])


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(clip_bound=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(mode="turbo")
    with pytest.raises(ValueError):
        TrainConfig(metric="cosine")
    # negative and above-range thresholds are legal: they force all-miss / all-hit runs
    TrainConfig(threshold=-1.0)
    TrainConfig(threshold=2.0)
