"""Small numpy neural networks: the MNIST CNN and the HAR MLP.

Tensors are float64 numpy arrays. Conv weights are laid out
``(out_channels, in_channels, kh, kw)`` and dense weights ``(out, in)``;
flattening before the CNN's classifier is channel-major ``(C, H, W)``.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyShardError, FormatError, ShapeError

DEFAULT_LR = 0.01
DEFAULT_MOMENTUM = 0.9
BATCH_SIZE = 32


class Arch(enum.Enum):
    MNIST_CNN = 1
    HAR_MLP = 2

    @property
    def input_shape(self):
        return (1, 28, 28) if self is Arch.MNIST_CNN else (561,)

    @property
    def num_classes(self):
        return 10 if self is Arch.MNIST_CNN else 6


# (weight shape, bias shape) per layer, in declaration order
LAYER_SHAPES = {
    Arch.MNIST_CNN: [((16, 1, 5, 5), (16,)), ((32, 16, 5, 5), (32,)), ((10, 32 * 7 * 7), (10,))],
    Arch.HAR_MLP: [((128, 561), (128,)), ((64, 128), (64,)), ((6, 64), (6,))],
}
# dropout rate applied after each layer (training only)
DROPOUT = {Arch.MNIST_CNN: (0.0, 0.5, 0.0), Arch.HAR_MLP: (0.5, 0.3, 0.0)}


@dataclass(frozen=True)
class ModelParams:
    arch: Arch
    layers: tuple

    def __post_init__(self):
        expected = LAYER_SHAPES[self.arch]
        if len(self.layers) != len(expected):
            raise ShapeError(f"{self.arch.name} has {len(expected)} layers, got {len(self.layers)}")
        for (w, b), (ws, bs) in zip(self.layers, expected):
            if w.shape != ws or b.shape != bs:
                raise ShapeError(f"layer shapes {w.shape}/{b.shape}, expected {ws}/{bs}")
            w.flags.writeable = False
            b.flags.writeable = False

    def num_parameters(self) -> int:
        return sum(w.size + b.size for w, b in self.layers)


@dataclass(frozen=True)
class ModelDigest:
    digest: bytes

    @property
    def hi(self) -> int:
        return int.from_bytes(self.digest[:16], "big")

    @property
    def lo(self) -> int:
        return int.from_bytes(self.digest[16:32], "big")

    @property
    def limbs(self) -> tuple:
        """``(lo, hi)``, the order they take among the circuit's public inputs."""
        return self.lo, self.hi


def zero_params(arch: Arch) -> ModelParams:
    return ModelParams(arch, tuple((np.zeros(ws), np.zeros(bs)) for ws, bs in LAYER_SHAPES[arch]))


def init_params(arch: Arch, seed) -> ModelParams:
    """He-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for ws, bs in LAYER_SHAPES[arch]:
        fan_in = int(np.prod(ws[1:]))
        bound = math.sqrt(6.0 / fan_in)
        layers.append((rng.uniform(-bound, bound, size=ws), np.zeros(bs)))
    return ModelParams(arch, tuple(layers))


# ---------------------------------------------------------------------------
# layers


def conv2d_forward(x, w, b, pad):
    """Stride-1 convolution. Returns the output and the im2col cache."""
    n, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh, ow = h + 2 * pad - kh + 1, wd + 2 * pad - kw + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    out = cols @ w.reshape(f, -1).T + b
    return out.reshape(n, oh, ow, f).transpose(0, 3, 1, 2), (x.shape, cols, pad)


def conv2d_backward(dout, w, cache):
    (n, c, h, wd), cols, pad = cache
    f, _, kh, kw = w.shape
    oh, ow = dout.shape[2], dout.shape[3]
    d = dout.transpose(0, 2, 3, 1).reshape(-1, f)
    dw = (d.T @ cols).reshape(w.shape)
    db = d.sum(axis=0)
    dcols = (d @ w.reshape(f, -1)).reshape(n, oh, ow, c, kh, kw)
    dxp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad))
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i : i + oh, j : j + ow] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    dx = dxp[:, :, pad : pad + h, pad : pad + wd]
    return dx, dw, db


def maxpool2_forward(x):
    n, c, h, w = x.shape
    win = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return out, (x.shape, arg)


def maxpool2_backward(dout, cache):
    (n, c, h, w), arg = cache
    dwin = np.zeros((n, c, h // 2, w // 2, 4))
    np.put_along_axis(dwin, arg[..., None], dout[..., None], axis=-1)
    return dwin.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)


def dense_forward(x, w, b):
    return x @ w.T + b


def dense_backward(dout, x, w):
    return dout @ w, dout.T @ x, dout.sum(axis=0)


def log_softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def cross_entropy_batch(logits, labels):
    """Per-sample ``-log softmax(logits)[label]``, max-subtraction stabilized."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    m = logits.max(axis=1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    return lse - logits[np.arange(len(labels)), labels]


def cross_entropy(logits, label: int) -> float:
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not 0 <= label < logits.size:
        raise IndexError(f"label {label} out of range for {logits.size} classes")
    return float(cross_entropy_batch(logits[None, :], np.array([label]))[0])


# ---------------------------------------------------------------------------
# whole-model passes


def _as_batch(arch: Arch, x):
    x = np.asarray(x, dtype=np.float64)
    shape = arch.input_shape
    if x.shape == shape:
        return x[None], True
    if x.ndim == len(shape) + 1 and x.shape[1:] == shape:
        return x, False
    raise ShapeError(f"{arch.name} expects input shape {shape}, got {x.shape}")


def _dropout(h, rate, rng):
    if not rate or rng is None:
        return h, None
    mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
    return h * mask, mask


def _forward_cache(params: ModelParams, x, rng=None):
    """Batched forward pass. Dropout is active only when ``rng`` is given."""
    (w1, b1), (w2, b2), (w3, b3) = params.layers
    drop = DROPOUT[params.arch]
    cache = {"x": x}
    if params.arch is Arch.MNIST_CNN:
        z1, cache["c1"] = conv2d_forward(x, w1, b1, 2)
        a1 = np.maximum(z1, 0)
        p1, cache["p1"] = maxpool2_forward(a1)
        z2, cache["c2"] = conv2d_forward(p1, w2, b2, 2)
        a2 = np.maximum(z2, 0)
        p2, cache["p2"] = maxpool2_forward(a2)
        flat = p2.reshape(len(x), -1)
        flat, cache["m2"] = _dropout(flat, drop[1], rng)
        cache.update(z1=z1, z2=z2, flat=flat, p2shape=p2.shape)
        return dense_forward(flat, w3, b3), cache
    z1 = dense_forward(x, w1, b1)
    a1, cache["m1"] = _dropout(np.maximum(z1, 0), drop[0], rng)
    z2 = dense_forward(a1, w2, b2)
    a2, cache["m2"] = _dropout(np.maximum(z2, 0), drop[1], rng)
    cache.update(z1=z1, a1=a1, z2=z2, a2=a2)
    return dense_forward(a2, w3, b3), cache


def forward(params: ModelParams, x):
    """Inference-mode logits for one input or a batch of inputs."""
    xb, single = _as_batch(params.arch, x)
    logits, _ = _forward_cache(params, xb)
    return logits[0] if single else logits


def loss_and_grads(params: ModelParams, x, labels, rng=None):
    """Mean cross-entropy over the batch and its gradient for every layer."""
    xb, _ = _as_batch(params.arch, x)
    labels = np.asarray(labels)
    logits, cache = _forward_cache(params, xb, rng)
    n = len(labels)
    loss = float(cross_entropy_batch(logits, labels).mean())
    d = softmax(logits)
    d[np.arange(n), labels] -= 1.0
    d /= n
    (w1, b1), (w2, b2), (w3, b3) = params.layers
    if params.arch is Arch.MNIST_CNN:
        dflat, dw3, db3 = dense_backward(d, cache["flat"], w3)
        if cache["m2"] is not None:
            dflat = dflat * cache["m2"]
        dp2 = dflat.reshape(cache["p2shape"])
        da2 = maxpool2_backward(dp2, cache["p2"])
        dz2 = da2 * (cache["z2"] > 0)
        dp1, dw2, db2 = conv2d_backward(dz2, w2, cache["c2"])
        da1 = maxpool2_backward(dp1, cache["p1"])
        dz1 = da1 * (cache["z1"] > 0)
        _, dw1, db1 = conv2d_backward(dz1, w1, cache["c1"])
    else:
        da2, dw3, db3 = dense_backward(d, cache["a2"], w3)
        if cache["m2"] is not None:
            da2 = da2 * cache["m2"]
        dz2 = da2 * (cache["z2"] > 0)
        da1, dw2, db2 = dense_backward(dz2, cache["a1"], w2)
        if cache["m1"] is not None:
            da1 = da1 * cache["m1"]
        dz1 = da1 * (cache["z1"] > 0)
        _, dw1, db1 = dense_backward(dz1, xb, w1)
    return loss, [(dw1, db1), (dw2, db2), (dw3, db3)]


def local_loss(params: ModelParams, shard, batch_size: int = BATCH_SIZE) -> float:
    """Mean per-sample cross-entropy over the whole shard.

    Summed over batches and divided once, so the value does not depend on
    ``batch_size`` beyond float reassociation.
    """
    features, labels = shard.features, shard.labels
    n = len(labels)
    if n == 0:
        raise EmptyShardError("cannot evaluate on an empty shard")
    total = 0.0
    for start in range(0, n, batch_size):
        logits = forward(params, features[start : start + batch_size])
        if logits.ndim == 1:
            logits = logits[None]
        total += float(cross_entropy_batch(logits, labels[start : start + batch_size]).sum())
    return total / n


def train_one_epoch(
    params: ModelParams,
    data,
    batch_size: int = BATCH_SIZE,
    seed=0,
    lr: float = DEFAULT_LR,
    momentum: float = DEFAULT_MOMENTUM,
) -> ModelParams:
    """One shuffled SGD-with-momentum pass; returns new parameters."""
    features, labels = data.features, data.labels
    n = len(labels)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    layers = [(w.copy(), b.copy()) for w, b in params.layers]
    velocity = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        current = ModelParams(params.arch, tuple((w.copy(), b.copy()) for w, b in layers))
        _, grads = loss_and_grads(current, features[idx], labels[idx], rng=rng)
        for i, ((w, b), (vw, vb), (gw, gb)) in enumerate(zip(layers, velocity, grads)):
            vw *= momentum
            vw += gw
            vb *= momentum
            vb += gb
            w -= lr * vw
            b -= lr * vb
    return ModelParams(params.arch, tuple(layers))


# ---------------------------------------------------------------------------
# serialization and hashing


def canonical_serialize(params: ModelParams) -> bytes:
    """Arch tag byte, then each layer's weights and bias as big-endian binary64."""
    parts = [bytes([params.arch.value])]
    for w, b in params.layers:
        parts.append(np.ascontiguousarray(w, dtype=">f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype=">f8").tobytes())
    return b"".join(parts)


def canonical_deserialize(raw: bytes) -> ModelParams:
    if not raw:
        raise FormatError("empty model encoding", 0)
    try:
        arch = Arch(raw[0])
    except ValueError:
        raise FormatError(f"unknown architecture tag {raw[0]}", 0) from None
    pos = 1
    layers = []
    for ws, bs in LAYER_SHAPES[arch]:
        arrays = []
        for shape in (ws, bs):
            count = int(np.prod(shape))
            end = pos + 8 * count
            if end > len(raw):
                raise FormatError("truncated model encoding", pos)
            arrays.append(np.frombuffer(raw[pos:end], dtype=">f8").astype(np.float64).reshape(shape))
            pos = end
        layers.append(tuple(arrays))
    if pos != len(raw):
        raise FormatError("trailing bytes after model encoding", pos)
    return ModelParams(arch, tuple(layers))


def serialized_length(arch: Arch) -> int:
    return 1 + 8 * sum(int(np.prod(ws)) + int(np.prod(bs)) for ws, bs in LAYER_SHAPES[arch])


def model_hash(params: ModelParams) -> ModelDigest:
    return ModelDigest(hashlib.sha256(canonical_serialize(params)).digest())
