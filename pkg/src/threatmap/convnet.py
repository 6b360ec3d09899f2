"""A small convolutional classifier implemented directly on numpy.

Six weight/pool layers: conv(3x3, same) -> relu -> maxpool(2x2, ceil) ->
conv -> relu -> maxpool -> dense -> relu -> dense -> softmax over two
classes. Forward, backward, and the SGD-with-momentum loop are hand-rolled;
a finite-difference harness verifies the analytic gradients. Training runs
in float32, verification in float64. All reductions are serial numpy ops,
so a fixed (init_seed, shuffle_seed, config) reproduces training exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .common import PipelineError, SplitMix64


class BadArchitecture(PipelineError):
    pass


class ShapeMismatch(PipelineError):
    pass


class StaleCache(PipelineError):
    pass


class EmptyPartition(PipelineError):
    pass


class EmptyInput(PipelineError):
    pass


class CorruptCheckpoint(PipelineError):
    pass


def _ceil_half(n: int) -> int:
    return -(-n // 2)


@dataclass(frozen=True)
class Architecture:
    """Layer plan: one conv+pool block per filter count, then two dense layers."""

    input_shape: tuple[int, int, int] = (3, 31, 24)
    conv_filters: tuple[int, ...] = (8, 16)
    kernel_size: int = 3
    dense_units: int = 64
    n_classes: int = 2

    def __post_init__(self) -> None:
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise BadArchitecture(f"kernel_size must be odd and positive, got {self.kernel_size}")
        if not self.conv_filters or any(f < 1 for f in self.conv_filters):
            raise BadArchitecture(f"conv_filters must be positive, got {self.conv_filters}")
        if any(d < 1 for d in self.input_shape) or len(self.input_shape) != 3:
            raise BadArchitecture(f"bad input shape {self.input_shape}")
        if self.dense_units < 1 or self.n_classes < 2:
            raise BadArchitecture("dense_units must be >= 1 and n_classes >= 2")
        for _, h, w in self.block_shapes():
            if h < 1 or w < 1:
                raise BadArchitecture("pooling reduces a spatial extent below 1")

    def block_shapes(self) -> list[tuple[int, int, int]]:
        """(channels, height, width) after each conv+pool block."""
        _, h, w = self.input_shape
        shapes = []
        for filters in self.conv_filters:
            h, w = _ceil_half(h), _ceil_half(w)
            shapes.append((filters, h, w))
        return shapes

    @property
    def flat_size(self) -> int:
        c, h, w = self.block_shapes()[-1]
        return c * h * w

    def weight_shapes(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Per weight layer: (kernel/matrix shape, bias shape)."""
        k = self.kernel_size
        shapes = []
        in_channels = self.input_shape[0]
        for filters in self.conv_filters:
            shapes.append(((filters, in_channels, k, k), (filters,)))
            in_channels = filters
        shapes.append(((self.flat_size, self.dense_units), (self.dense_units,)))
        shapes.append(((self.dense_units, self.n_classes), (self.n_classes,)))
        return shapes

    @property
    def param_count(self) -> int:
        return sum(
            int(np.prod(w)) + int(np.prod(b)) for w, b in self.weight_shapes()
        )


DEFAULT_ARCHITECTURE = Architecture()

# Shrunk variant for the double-precision gradient checks.
REDUCED_ARCHITECTURE = Architecture(
    input_shape=(3, 8, 6), conv_filters=(4, 8), dense_units=16
)


@dataclass
class ParamTensors:
    """One array per weight layer; also used for gradients and velocity."""

    conv_w: list[np.ndarray]
    conv_b: list[np.ndarray]
    dense_w: list[np.ndarray]
    dense_b: list[np.ndarray]

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        named = []
        for i, (w, b) in enumerate(zip(self.conv_w, self.conv_b)):
            named.append((f"conv_w{i}", w))
            named.append((f"conv_b{i}", b))
        for i, (w, b) in enumerate(zip(self.dense_w, self.dense_b)):
            named.append((f"dense_w{i}", w))
            named.append((f"dense_b{i}", b))
        return named


@dataclass
class ModelParams(ParamTensors):
    """Weights plus the architecture and seed they were initialized from."""

    arch: Architecture = DEFAULT_ARCHITECTURE
    init_seed: int = 0

    @property
    def dtype(self) -> np.dtype:
        return self.conv_w[0].dtype

    @property
    def param_count(self) -> int:
        return sum(t.size for _, t in self.tensors())


def init_model(arch: Architecture, seed: int, dtype=np.float32) -> ModelParams:
    """He-scaled weights for the relu layers, Xavier for the output, zero biases."""
    rng = np.random.default_rng(seed)
    conv_w, conv_b = [], []
    in_channels = arch.input_shape[0]
    k = arch.kernel_size
    for filters in arch.conv_filters:
        fan_in = in_channels * k * k
        std = np.sqrt(2.0 / fan_in)
        conv_w.append(rng.normal(0.0, std, size=(filters, in_channels, k, k)).astype(dtype))
        conv_b.append(np.zeros(filters, dtype=dtype))
        in_channels = filters

    fan_in = arch.flat_size
    hidden_w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, arch.dense_units))
    out_std = np.sqrt(2.0 / (arch.dense_units + arch.n_classes))
    out_w = rng.normal(0.0, out_std, size=(arch.dense_units, arch.n_classes))
    dense_w = [hidden_w.astype(dtype), out_w.astype(dtype)]
    dense_b = [np.zeros(arch.dense_units, dtype=dtype), np.zeros(arch.n_classes, dtype=dtype)]
    return ModelParams(
        conv_w=conv_w, conv_b=conv_b, dense_w=dense_w, dense_b=dense_b,
        arch=arch, init_seed=seed,
    )


def zero_like(params: ParamTensors) -> ParamTensors:
    return ParamTensors(
        conv_w=[np.zeros_like(t) for t in params.conv_w],
        conv_b=[np.zeros_like(t) for t in params.conv_b],
        dense_w=[np.zeros_like(t) for t in params.dense_w],
        dense_b=[np.zeros_like(t) for t in params.dense_b],
    )


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Stride-1 same-padding convolution via an im2col matmul.

    Returns the (N, F, H, W) output and the (N, H*W, C*k*k) patch matrix the
    backward pass reuses.
    """
    n, c, h, wd = x.shape
    f, _, k, _ = w.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))      # (N,C,H,W,k,k)
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(n, h * wd, c * k * k)
    out = cols @ w.reshape(f, -1).T + b                          # (N,HW,F)
    return out.transpose(0, 2, 1).reshape(n, f, h, wd), cols


def _conv_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, x_shape):
    n, c, h, wd = x_shape
    f, _, k, _ = w.shape
    p = k // 2
    dmat = dout.reshape(n, f, h * wd).transpose(0, 2, 1)         # (N,HW,F)
    dw = np.einsum("nif,nij->fj", dmat, cols, optimize=True).reshape(w.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = (dmat @ w.reshape(f, -1)).reshape(n, h, wd, c, k, k).transpose(0, 3, 1, 2, 4, 5)
    dxp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=dout.dtype)
    for di in range(k):
        for dj in range(k):
            dxp[:, :, di:di + h, dj:dj + wd] += dcols[:, :, :, :, di, dj]
    return dw, db, dxp[:, :, p:p + h, p:p + wd]


def _pool_forward(x: np.ndarray):
    """2x2 stride-2 max pooling with ceil-mode output extents.

    Odd edges are padded with -inf so they never win; within a window the
    first maximum wins ties, which keeps gradient routing deterministic.
    """
    n, c, h, w = x.shape
    ho, wo = _ceil_half(h), _ceil_half(w)
    xp = np.full((n, c, ho * 2, wo * 2), -np.inf, dtype=x.dtype)
    xp[:, :, :h, :w] = x
    windows = xp.reshape(n, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, 4)
    idx = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _pool_backward(dout: np.ndarray, idx: np.ndarray, x_shape):
    n, c, h, w = x_shape
    ho, wo = dout.shape[2], dout.shape[3]
    dwin = np.zeros((n, c, ho, wo, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dxp = dwin.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * 2, wo * 2)
    return dxp[:, :, :h, :w]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardCache:
    """Intermediates one forward pass produces and one backward pass consumes."""

    params: ModelParams
    block_inputs: list[np.ndarray]     # input to each conv (pre-padding)
    block_cols: list[np.ndarray]       # im2col patch matrices
    block_pre: list[np.ndarray]        # conv outputs before relu
    block_pool_idx: list[np.ndarray]   # argmax index per pooling window
    pooled_shape: tuple[int, ...]
    flat: np.ndarray
    hidden_pre: np.ndarray
    hidden_act: np.ndarray
    probs: np.ndarray
    consumed: bool = False


def forward(params: ModelParams, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Class probabilities for a batch of (3, H, W) tensors, plus the cache."""
    batch = np.asarray(batch)
    if batch.ndim != 4 or batch.shape[1:] != params.arch.input_shape:
        raise ShapeMismatch(
            f"batch shape {batch.shape} does not match input {params.arch.input_shape}"
        )
    x = batch.astype(params.dtype, copy=False)

    block_inputs, block_cols, block_pre, block_pool_idx = [], [], [], []
    for w, b in zip(params.conv_w, params.conv_b):
        block_inputs.append(x)
        pre, cols = _conv_forward(x, w, b)
        act = np.maximum(pre, 0)
        pooled, idx = _pool_forward(act)
        block_cols.append(cols)
        block_pre.append(pre)
        block_pool_idx.append(idx)
        x = pooled

    flat = x.reshape(x.shape[0], -1)
    hidden_pre = flat @ params.dense_w[0] + params.dense_b[0]
    hidden_act = np.maximum(hidden_pre, 0)
    logits = hidden_act @ params.dense_w[1] + params.dense_b[1]
    probs = _softmax(logits)

    cache = ForwardCache(
        params=params,
        block_inputs=block_inputs,
        block_cols=block_cols,
        block_pre=block_pre,
        block_pool_idx=block_pool_idx,
        pooled_shape=x.shape,
        flat=flat,
        hidden_pre=hidden_pre,
        hidden_act=hidden_act,
        probs=probs,
    )
    return probs, cache


def compute_cost(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy, -ln p(true class), with p clamped to >= 1e-12."""
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ShapeMismatch(f"probs {probs.shape} vs labels {labels.shape}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= probs.shape[1]:
        raise ShapeMismatch("labels out of class range")
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-12)).mean())


def backward(cache: ForwardCache, labels: np.ndarray) -> ParamTensors:
    """Gradients of the mean cross-entropy with respect to every parameter.

    The cache is single-use; a second call raises StaleCache.
    """
    if cache.consumed:
        raise StaleCache("this forward cache was already consumed by backward()")
    cache.consumed = True
    labels = np.asarray(labels)
    n = cache.probs.shape[0]
    if labels.shape != (n,):
        raise ShapeMismatch(f"labels shape {labels.shape} does not match batch of {n}")

    params = cache.params
    dtype = params.dtype

    # d cost / d logits = (probs - onehot) / N
    dlogits = cache.probs.astype(dtype, copy=True)
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    grads = zero_like(params)
    grads.dense_w[1] = cache.hidden_act.T @ dlogits
    grads.dense_b[1] = dlogits.sum(axis=0)
    dhidden = (dlogits @ params.dense_w[1].T) * (cache.hidden_pre > 0)
    grads.dense_w[0] = cache.flat.T @ dhidden
    grads.dense_b[0] = dhidden.sum(axis=0)

    dx = (dhidden @ params.dense_w[0].T).reshape(cache.pooled_shape)
    for i in reversed(range(len(params.conv_w))):
        dact = _pool_backward(dx, cache.block_pool_idx[i], cache.block_pre[i].shape)
        dpre = dact * (cache.block_pre[i] > 0)
        dw, db, dx = _conv_backward(
            dpre, cache.block_cols[i], params.conv_w[i], cache.block_inputs[i].shape
        )
        grads.conv_w[i] = dw
        grads.conv_b[i] = db
    return grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 16
    epochs: int = 30
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_accuracy: float
    validation_accuracy: float
    cost: float


def _check_same_shapes(params: ParamTensors, other: ParamTensors, what: str) -> None:
    for (_, a), (_, b) in zip(params.tensors(), other.tensors()):
        if a.shape != b.shape:
            raise ShapeMismatch(f"{what} shape {b.shape} does not match parameter {a.shape}")


def sgd_step(
    params: ModelParams,
    grads: ParamTensors,
    velocity: ParamTensors,
    config: TrainConfig,
) -> tuple[ModelParams, ParamTensors]:
    """One momentum update: v <- m*v - lr*g; p <- p + v. Returns new values."""
    _check_same_shapes(params, grads, "gradient")
    _check_same_shapes(params, velocity, "velocity")
    m = params.dtype.type(config.momentum)
    lr = params.dtype.type(config.learning_rate)

    def update(p_list, g_list, v_list):
        new_p, new_v = [], []
        for p, g, v in zip(p_list, g_list, v_list):
            v2 = m * v - lr * g
            new_v.append(v2)
            new_p.append(p + v2)
        return new_p, new_v

    new_conv_w, v_conv_w = update(params.conv_w, grads.conv_w, velocity.conv_w)
    new_conv_b, v_conv_b = update(params.conv_b, grads.conv_b, velocity.conv_b)
    new_dense_w, v_dense_w = update(params.dense_w, grads.dense_w, velocity.dense_w)
    new_dense_b, v_dense_b = update(params.dense_b, grads.dense_b, velocity.dense_b)
    new_params = replace(
        params, conv_w=new_conv_w, conv_b=new_conv_b, dense_w=new_dense_w, dense_b=new_dense_b
    )
    new_velocity = ParamTensors(
        conv_w=v_conv_w, conv_b=v_conv_b, dense_w=v_dense_w, dense_b=v_dense_b
    )
    return new_params, new_velocity


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # [true class, predicted class]
    mean_cost: float


def _predict_probs(params: ModelParams, x: np.ndarray, chunk: int = 256) -> np.ndarray:
    parts = [forward(params, x[i:i + chunk])[0] for i in range(0, len(x), chunk)]
    return np.concatenate(parts, axis=0)


def evaluate(params: ModelParams, x: np.ndarray, labels: np.ndarray) -> EvalResult:
    """Accuracy, confusion matrix, and mean cost over a sample set.

    Prediction is the argmax probability; an exact tie resolves to class 0
    (normal).
    """
    x = np.asarray(x)
    labels = np.asarray(labels)
    if len(x) == 0:
        raise EmptyInput("evaluate() needs at least one sample")
    probs = _predict_probs(params, x)
    predicted = probs.argmax(axis=1)  # first max wins ties -> class 0
    k = params.arch.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(labels, predicted):
        confusion[int(t), int(p)] += 1
    accuracy = float(np.trace(confusion)) / len(labels)
    return EvalResult(accuracy=accuracy, confusion=confusion, mean_cost=compute_cost(probs, labels))


def train(
    params: ModelParams,
    train_set: tuple[np.ndarray, np.ndarray],
    validation_set: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
) -> tuple[ModelParams, list[EpochMetrics]]:
    """Mini-batch SGD with momentum; returns final params and the epoch history.

    history[0] records the metrics of the freshly initialized model before
    any update (the anchor the accuracy/cost curves start from); each later
    entry e follows the e-th full pass of shuffled mini-batch updates, so a
    history of length config.epochs covers config.epochs - 1 passes.
    """
    x_train, y_train = np.asarray(train_set[0]), np.asarray(train_set[1])
    x_val, y_val = np.asarray(validation_set[0]), np.asarray(validation_set[1])
    if len(x_train) == 0:
        raise EmptyPartition("training partition is empty")
    if len(x_val) == 0:
        raise EmptyPartition("validation partition is empty")
    x_train = x_train.astype(params.dtype, copy=False)
    x_val = x_val.astype(params.dtype, copy=False)

    def snapshot(epoch: int) -> EpochMetrics:
        on_train = evaluate(params, x_train, y_train)
        on_val = evaluate(params, x_val, y_val)
        return EpochMetrics(
            epoch=epoch,
            train_accuracy=on_train.accuracy,
            validation_accuracy=on_val.accuracy,
            cost=on_train.mean_cost,
        )

    history = [snapshot(0)]
    rng = SplitMix64(config.shuffle_seed)
    velocity = zero_like(params)
    order = list(range(len(x_train)))
    for epoch in range(1, config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch_idx = order[start:start + config.batch_size]
            _, cache = forward(params, x_train[batch_idx])
            grads = backward(cache, y_train[batch_idx])
            params, velocity = sgd_step(params, grads, velocity, config)
        history.append(snapshot(epoch))
    return params, history


def grad_check(
    arch: Architecture = REDUCED_ARCHITECTURE,
    seed: int = 0,
    epsilon: float = 1e-3,
    max_checks_per_tensor: int = 40,
    batch_size: int = 4,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in double precision on a (usually reduced) architecture; a sampled
    subset of coordinates per tensor is perturbed by +-epsilon. The relative
    error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    rng = np.random.default_rng(seed)
    params = init_model(arch, seed, dtype=np.float64)
    x = rng.random((batch_size, *arch.input_shape))
    labels = rng.integers(0, arch.n_classes, size=batch_size)

    probs, cache = forward(params, x)
    analytic = backward(cache, labels)

    def loss() -> float:
        return compute_cost(forward(params, x)[0], labels)

    worst = 0.0
    for (_, tensor), (_, grad) in zip(params.tensors(), analytic.tensors()):
        flat = tensor.reshape(-1)
        grad_flat = grad.reshape(-1)
        if flat.size <= max_checks_per_tensor:
            indices = np.arange(flat.size)
        else:
            indices = rng.choice(flat.size, size=max_checks_per_tensor, replace=False)
        for i in indices:
            original = flat[i]
            flat[i] = original + epsilon
            up = loss()
            flat[i] = original - epsilon
            down = loss()
            flat[i] = original
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(abs(grad_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(grad_flat[i] - numeric) / denom)
    return worst


CHECKPOINT_MAGIC = "threatmap-checkpoint v1"


def save_checkpoint(params: ModelParams, path) -> None:
    """Write a byte-deterministic container: magic, JSON header, raw tensors."""
    header = {
        "arch": {
            "input_shape": list(params.arch.input_shape),
            "conv_filters": list(params.arch.conv_filters),
            "kernel_size": params.arch.kernel_size,
            "dense_units": params.arch.dense_units,
            "n_classes": params.arch.n_classes,
        },
        "init_seed": params.init_seed,
        "dtype": "<f8" if params.dtype == np.float64 else "<f4",
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in params.tensors()],
    }
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC.encode("ascii") + b"\n")
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        for _, tensor in params.tensors():
            fh.write(np.ascontiguousarray(tensor, dtype=header["dtype"]).tobytes())


def load_checkpoint(path) -> ModelParams:
    """Read a checkpoint and validate every tensor shape against its architecture."""
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        magic_end = blob.index(b"\n")
        header_end = blob.index(b"\n", magic_end + 1)
    except ValueError:
        raise CorruptCheckpoint(f"{path}: truncated header") from None
    if blob[:magic_end].decode("ascii", "replace") != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint(f"{path}: not a model checkpoint")
    try:
        header = json.loads(blob[magic_end + 1:header_end])
        arch = Architecture(
            input_shape=tuple(header["arch"]["input_shape"]),
            conv_filters=tuple(header["arch"]["conv_filters"]),
            kernel_size=header["arch"]["kernel_size"],
            dense_units=header["arch"]["dense_units"],
            n_classes=header["arch"]["n_classes"],
        )
        dtype = np.dtype(header["dtype"])
        declared = [(t["name"], tuple(t["shape"])) for t in header["tensors"]]
    except (KeyError, TypeError, ValueError, BadArchitecture) as exc:
        raise CorruptCheckpoint(f"{path}: bad header ({exc})") from None

    template = init_model(arch, seed=int(header.get("init_seed", 0)), dtype=dtype)
    expected = [(name, t.shape) for name, t in template.tensors()]
    if declared != expected:
        raise CorruptCheckpoint(f"{path}: tensor list does not match architecture")

    offset = header_end + 1
    loaded: list[np.ndarray] = []
    for name, shape in expected:
        count = int(np.prod(shape))
        nbytes = count * dtype.itemsize
        chunk = blob[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptCheckpoint(f"{path}: truncated tensor {name}")
        loaded.append(np.frombuffer(chunk, dtype=dtype).reshape(shape).copy())
        offset += nbytes
    if offset != len(blob):
        raise CorruptCheckpoint(f"{path}: trailing bytes after tensors")

    n_conv = len(arch.conv_filters)
    return ModelParams(
        conv_w=loaded[0:2 * n_conv:2],
        conv_b=loaded[1:2 * n_conv:2],
        dense_w=loaded[2 * n_conv::2],
        dense_b=loaded[2 * n_conv + 1::2],
        arch=arch,
        init_seed=int(header.get("init_seed", 0)),
    )


HISTORY_HEADER = ("epoch", "train_accuracy", "validation_accuracy", "cost")


def history_to_csv(history: Sequence[EpochMetrics]) -> str:
    lines = [",".join(HISTORY_HEADER)]
    for m in history:
        lines.append(
            f"{m.epoch},{m.train_accuracy:.6f},{m.validation_accuracy:.6f},{m.cost:.6f}"
        )
    return "\n".join(lines) + "\n"


def write_history(history: Sequence[EpochMetrics], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(history_to_csv(history))


def load_history(path) -> list[EpochMetrics]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != HISTORY_HEADER:
        raise PipelineError(f"{path}: bad history header")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        epoch, train_acc, val_acc, cost = line.split(",")
        out.append(EpochMetrics(int(epoch), float(train_acc), float(val_acc), float(cost)))
    return out
