import hashlib
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkpfedeval.dataio import Dataset
from zkpfedeval.errors import EmptyShardError, ShapeError
from zkpfedeval import nn
from zkpfedeval.nn import (
    Arch,
    ModelParams,
    canonical_deserialize,
    canonical_serialize,
    cross_entropy,
    forward,
    init_params,
    local_loss,
    model_hash,
    train_one_epoch,
    zero_params,
)

from synth import har_like, mnist_like


@pytest.fixture(scope="module")
def cnn():
    return init_params(Arch.MNIST_CNN, 3)


@pytest.fixture(scope="module")
def mlp():
    return init_params(Arch.HAR_MLP, 3)


def test_layer_shapes_follow_architectures():
    cnn = [(w.shape, b.shape) for w, b in zero_params(Arch.MNIST_CNN).layers]
    assert cnn == [((16, 1, 5, 5), (16,)), ((32, 16, 5, 5), (32,)), ((10, 1568), (10,))]
    mlp = [(w.shape, b.shape) for w, b in zero_params(Arch.HAR_MLP).layers]
    assert mlp == [((128, 561), (128,)), ((64, 128), (64,)), ((6, 64), (6,))]


def test_forward_output_lengths(cnn, mlp):
    rng = np.random.default_rng(0)
    assert forward(cnn, rng.random((1, 28, 28))).shape == (10,)
    assert forward(mlp, rng.random(561)).shape == (6,)
    assert forward(cnn, rng.random((4, 1, 28, 28))).shape == (4, 10)


@pytest.mark.parametrize("arch", list(Arch))
def test_zero_model_gives_zero_logits(arch):
    x = np.random.default_rng(1).random(arch.input_shape)
    assert not forward(zero_params(arch), x).any()


def test_forward_shape_errors(cnn, mlp):
    with pytest.raises(ShapeError):
        forward(cnn, np.zeros((28, 28)))
    with pytest.raises(ShapeError):
        forward(mlp, np.zeros(560))


def test_forward_is_bitwise_deterministic(cnn):
    x = np.random.default_rng(2).random((3, 1, 28, 28))
    assert forward(cnn, x).tobytes() == forward(cnn, x).tobytes()


def test_cross_entropy_uniform():
    assert cross_entropy(np.zeros(10), 3) == pytest.approx(math.log(10), abs=1e-12)
    assert cross_entropy(np.zeros(6), 5) == pytest.approx(math.log(6), abs=1e-12)
    assert cross_entropy(np.zeros(10), 3) == pytest.approx(2.302585, abs=1e-6)


def test_cross_entropy_against_high_precision_oracle():
    mpmath.mp.dps = 50
    for logits, label in [((1000.0, 0.0), 0), ((1000.0, 0.0), 1), ((3.5, -2.0, 0.25), 2)]:
        expect = -(mpmath.mpf(logits[label]) - mpmath.log(sum(mpmath.e ** mpmath.mpf(v) for v in logits)))
        assert cross_entropy(np.array(logits), label) == pytest.approx(float(expect), abs=1e-9)
    assert cross_entropy(np.array([1000.0, 0.0]), 0) < 1e-9


def test_cross_entropy_label_out_of_range():
    with pytest.raises(IndexError):
        cross_entropy(np.zeros(6), 6)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=12), st.data())
def test_cross_entropy_nonnegative_and_softmax_normalized(logits, data):
    label = data.draw(st.integers(0, len(logits) - 1))
    assert cross_entropy(np.array(logits), label) >= 0
    assert abs(nn.softmax(np.array(logits)).sum() - 1) <= 1e-12


def test_local_loss_single_sample_equals_cross_entropy(mlp):
    ds = har_like(1, 4)
    assert local_loss(mlp, ds) == cross_entropy(forward(mlp, ds.features[0]), int(ds.labels[0]))


def test_local_loss_zero_models():
    assert abs(local_loss(zero_params(Arch.MNIST_CNN), mnist_like(70, 1)) - math.log(10)) <= 1e-9
    assert abs(local_loss(zero_params(Arch.HAR_MLP), har_like(70, 1)) - math.log(6)) <= 1e-9


def test_local_loss_independent_of_batching(mlp):
    ds = har_like(101, 5)
    ref = local_loss(mlp, ds, batch_size=32)
    for bs in (1, 7, 64, 101, 500):
        assert abs(local_loss(mlp, ds, batch_size=bs) - ref) <= 1e-9


def test_local_loss_empty_shard(mlp):
    with pytest.raises(EmptyShardError):
        local_loss(mlp, Dataset(np.zeros((0, 561)), np.zeros(0, dtype=int)))


def test_zero_learning_rate_leaves_params_unchanged(mlp):
    out = train_one_epoch(mlp, har_like(64, 0), seed=1, lr=0.0)
    for (w0, b0), (w1, b1) in zip(mlp.layers, out.layers):
        assert np.array_equal(w0, w1) and np.array_equal(b0, b1)


def test_training_is_deterministic_and_reduces_loss(mlp):
    data = har_like(320, 0)
    a = train_one_epoch(mlp, data, seed=9)
    b = train_one_epoch(mlp, data, seed=9)
    assert canonical_serialize(a) == canonical_serialize(b)
    assert local_loss(a, data) < local_loss(mlp, data)


def test_training_does_not_mutate_input(mlp):
    before = canonical_serialize(mlp)
    train_one_epoch(mlp, har_like(64, 0), seed=1)
    assert canonical_serialize(mlp) == before


# -- gradients ---------------------------------------------------------------

EPS = 1e-5


def numeric_grad(f, x):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + EPS
        up = f()
        x[i] = old - EPS
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * EPS)
    return g


def rel_err(a, b):
    return np.abs(a - b).max() / max(1e-8, np.abs(a).max(), np.abs(b).max())


def test_conv_gradients():
    rng = np.random.default_rng(0)
    x, w, b = rng.normal(size=(2, 3, 6, 6)), rng.normal(size=(4, 3, 3, 3)), rng.normal(size=4)
    up = rng.normal(size=(2, 4, 6, 6))

    def f():
        return float((nn.conv2d_forward(x, w, b, 1)[0] * up).sum())

    _, cache = nn.conv2d_forward(x, w, b, 1)
    dx, dw, db = nn.conv2d_backward(up, w, cache)
    assert rel_err(dx, numeric_grad(f, x)) <= 1e-4
    assert rel_err(dw, numeric_grad(f, w)) <= 1e-4
    assert rel_err(db, numeric_grad(f, b)) <= 1e-4


def test_conv_matches_direct_sum():
    rng = np.random.default_rng(1)
    x, w, b = rng.normal(size=(1, 2, 5, 5)), rng.normal(size=(3, 2, 3, 3)), rng.normal(size=3)
    out, _ = nn.conv2d_forward(x, w, b, 1)
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    for f in range(3):
        for i in range(5):
            for j in range(5):
                assert out[0, f, i, j] == pytest.approx((xp[0, :, i : i + 3, j : j + 3] * w[f]).sum() + b[f])


def test_maxpool_gradients():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 3, 4, 4))
    up = rng.normal(size=(2, 3, 2, 2))

    def f():
        return float((nn.maxpool2_forward(x)[0] * up).sum())

    _, cache = nn.maxpool2_forward(x)
    assert rel_err(nn.maxpool2_backward(up, cache), numeric_grad(f, x)) <= 1e-4


def test_dense_gradients():
    rng = np.random.default_rng(3)
    x, w, b = rng.normal(size=(4, 5)), rng.normal(size=(3, 5)), rng.normal(size=3)
    up = rng.normal(size=(4, 3))

    def f():
        return float((nn.dense_forward(x, w, b) * up).sum())

    dx, dw, db = nn.dense_backward(up, x, w)
    assert rel_err(dx, numeric_grad(f, x)) <= 1e-4
    assert rel_err(dw, numeric_grad(f, w)) <= 1e-4
    assert rel_err(db, numeric_grad(f, b)) <= 1e-4


def test_softmax_cross_entropy_gradient():
    rng = np.random.default_rng(4)
    logits, labels = rng.normal(size=(5, 6)), rng.integers(0, 6, 5)

    def f():
        return float(nn.cross_entropy_batch(logits, labels).mean())

    analytic = nn.softmax(logits)
    analytic[np.arange(5), labels] -= 1
    assert rel_err(analytic / 5, numeric_grad(f, logits)) <= 1e-4


@pytest.mark.parametrize("arch", list(Arch))
def test_whole_model_gradient_spot_checks(arch):
    params = init_params(arch, 11)
    rng = np.random.default_rng(5)
    data = mnist_like(3, 2) if arch is Arch.MNIST_CNN else har_like(3, 2)
    _, grads = nn.loss_and_grads(params, data.features, data.labels)
    layers = [(w.copy(), b.copy()) for w, b in params.layers]
    for li, (w, _) in enumerate(layers):
        for _ in range(4):
            idx = tuple(rng.integers(0, s) for s in w.shape)
            old = w[idx]

            def loss_at(v):
                w[idx] = v
                return nn.loss_and_grads(ModelParams(arch, tuple((a.copy(), c.copy()) for a, c in layers)), data.features, data.labels)[0]

            num = (loss_at(old + EPS) - loss_at(old - EPS)) / (2 * EPS)
            w[idx] = old
            ana = grads[li][0][idx]
            assert abs(ana - num) <= 1e-4 * max(1e-3, abs(ana), abs(num))


# -- serialization and hashing -----------------------------------------------


def test_serialization_layout(mlp):
    raw = canonical_serialize(zero_params(Arch.HAR_MLP))
    assert len(raw) == 1 + 8 * (561 * 128 + 128 + 128 * 64 + 64 + 64 * 6 + 6)
    raw = canonical_serialize(mlp)
    assert raw[0] == Arch.HAR_MLP.value
    first = np.frombuffer(raw[1:9], dtype=">f8")[0]
    assert first == mlp.layers[0][0][0, 0]
    assert canonical_serialize(mlp) == raw
    assert canonical_deserialize(raw) is not None
    assert canonical_serialize(canonical_deserialize(raw)) == raw


def test_bit_flip_changes_bytes_and_digest(mlp):
    raw = bytearray(canonical_serialize(mlp))
    w = mlp.layers[1][0].copy()
    w.view(np.uint64)[3, 7] ^= 1
    changed = ModelParams(mlp.arch, (mlp.layers[0], (w, mlp.layers[1][1]), mlp.layers[2]))
    assert canonical_serialize(changed) != bytes(raw)
    assert model_hash(changed) != model_hash(mlp)


def test_digest_is_sha256_of_serialization(cnn):
    d = model_hash(cnn)
    assert d.digest == hashlib.sha256(canonical_serialize(cnn)).digest()
    assert d.hi == int.from_bytes(d.digest[:16], "big")
    assert d.lo == int.from_bytes(d.digest[16:], "big")
    assert d.limbs == (d.lo, d.hi)
    assert max(d.limbs) < 2**128
    assert model_hash(cnn) == model_hash(ModelParams(cnn.arch, tuple((w.copy(), b.copy()) for w, b in cnn.layers)))


def test_sha256_reference_vector():
    assert hashlib.sha256(b"").hexdigest().startswith("e3b0c442")


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_sampled_perturbations_change_digest(data):
    params = init_params(Arch.HAR_MLP, 0)
    ref = model_hash(params)
    li = data.draw(st.integers(0, 2))
    which = data.draw(st.integers(0, 1))
    arr = params.layers[li][which].copy()
    flat = data.draw(st.integers(0, arr.size - 1))
    arr.flat[flat] += data.draw(st.sampled_from([1e-12, -1e-3, 0.5]))
    layers = list(params.layers)
    layers[li] = (arr, layers[li][1]) if which == 0 else (layers[li][0], arr)
    assert model_hash(ModelParams(params.arch, tuple(layers))) != ref
