"""Small convolutional network trained with plain mini-batch gradient descent.

Architecture: one convolution (ReLU) over the 2 x F pair embedding, a
non-overlapping pooling layer, one dense ReLU layer whose activations are
the extracted features, and a single sigmoid output unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import _kernels
from .errors import NumericalError

EPS = 1e-12
PARAM_NAMES = ("conv_w", "conv_b", "hidden_w", "hidden_b", "out_w", "out_b")
WEIGHT_NAMES = ("conv_w", "hidden_w", "out_w")


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, int]
    conv_filters: int = 8
    conv_kernel: tuple[int, int] = (2, 16)
    pool_window: tuple[int, int] = (1, 2)
    pool_mode: str = "max"
    hidden_units: int = 64

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "conv_kernel", tuple(int(v) for v in self.conv_kernel))
        object.__setattr__(self, "pool_window", tuple(int(v) for v in self.pool_window))
        H, W = self.input_shape
        kh, kw = self.conv_kernel
        if kh < 1 or kw < 1 or kh > H or kw > W:
            raise ValueError(f"conv kernel {self.conv_kernel} does not fit input {self.input_shape}")
        ph, pw = self.pool_window
        if ph < 1 or pw < 1:
            raise ValueError("pool window must be positive")
        if self.pooled_shape[0] < 1 or self.pooled_shape[1] < 1:
            raise ValueError("pooling window larger than the convolution output")
        if self.conv_filters < 1 or self.hidden_units < 1:
            raise ValueError("layer sizes must be positive")
        if self.pool_mode not in ("max", "mean"):
            raise ValueError("pool_mode must be 'max' or 'mean'")

    @property
    def conv_shape(self) -> tuple[int, int]:
        return (self.input_shape[0] - self.conv_kernel[0] + 1, self.input_shape[1] - self.conv_kernel[1] + 1)

    @property
    def pooled_shape(self) -> tuple[int, int]:
        ch, cw = self.conv_shape
        return ch // self.pool_window[0], cw // self.pool_window[1]

    @property
    def flat_size(self) -> int:
        ph, pw = self.pooled_shape
        return self.conv_filters * ph * pw

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return {
            "conv_w": (self.conv_filters, *self.conv_kernel),
            "conv_b": (self.conv_filters,),
            "hidden_w": (self.flat_size, self.hidden_units),
            "hidden_b": (self.hidden_units,),
            "out_w": (self.hidden_units, 1),
            "out_b": (1,),
        }


@dataclass
class NetworkParams:
    spec: NetworkSpec
    tensors: dict[str, np.ndarray]
    seed: int | None = None

    def __post_init__(self):
        shapes = self.spec.param_shapes()
        if set(self.tensors) != set(shapes):
            raise ValueError(f"expected parameters {sorted(shapes)}")
        for name, shape in shapes.items():
            arr = np.asarray(self.tensors[name], dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            self.tensors[name] = arr

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.spec, {k: v.copy() for k, v in self.tensors.items()}, self.seed)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    l2_strength: float = 1e-4
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.l2_strength < 0:
            raise ValueError("l2_strength must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")


def init_params(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    kh, kw = spec.conv_kernel
    fans = {
        "conv_w": (kh * kw, spec.conv_filters * kh * kw),
        "hidden_w": (spec.flat_size, spec.hidden_units),
        "out_w": (spec.hidden_units, 1),
    }
    tensors = {}
    for name, shape in spec.param_shapes().items():
        if name in fans:
            limit = np.sqrt(6.0 / sum(fans[name]))
            tensors[name] = rng.uniform(-limit, limit, size=shape)
        else:
            tensors[name] = np.zeros(shape)
    return NetworkParams(spec, tensors, seed)


def zero_params(spec: NetworkSpec) -> NetworkParams:
    return NetworkParams(spec, {n: np.zeros(s) for n, s in spec.param_shapes().items()})


def conv_forward(x, kernel, bias=0.0):
    """Valid, stride-1 cross-correlation of a 2-D input with one kernel."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape[0] > x.shape[0] or kernel.shape[1] > x.shape[1]:
        raise ValueError(f"kernel {kernel.shape} larger than input {x.shape}")
    out = _kernels.backend.conv_forward(
        np.ascontiguousarray(x[None]), np.ascontiguousarray(kernel[None]), np.array([float(bias)])
    )
    return out[0, 0]


def pool_forward(x, window, mode="max"):
    """Non-overlapping pooling; trailing partial windows are dropped."""
    x = np.asarray(x, dtype=np.float64)
    ph, pw = window
    if ph > x.shape[0] or pw > x.shape[1]:
        raise ValueError(f"pool window {window} larger than input {x.shape}")
    pooled, _ = _pool(x[None, None], (ph, pw), mode)
    return pooled[0, 0]


def _pool(a, window, mode):
    B, C, H, W = a.shape
    ph, pw = window
    Hp, Wp = H // ph, W // pw
    blocks = a[:, :, : Hp * ph, : Wp * pw].reshape(B, C, Hp, ph, Wp, pw).transpose(0, 1, 2, 4, 3, 5)
    blocks = blocks.reshape(B, C, Hp, Wp, ph * pw)
    if mode == "max":
        arg = blocks.argmax(axis=-1)
        return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], arg
    return blocks.mean(axis=-1), None


def _unpool(grad, arg, shape, window, mode):
    B, C, H, W = shape
    ph, pw = window
    Hp, Wp = grad.shape[2:]
    if mode == "max":
        spread = np.zeros((B, C, Hp, Wp, ph * pw))
        np.put_along_axis(spread, arg[..., None], grad[..., None], axis=-1)
    else:
        spread = np.repeat(grad[..., None] / (ph * pw), ph * pw, axis=-1)
    spread = spread.reshape(B, C, Hp, Wp, ph, pw).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, Hp * ph, Wp * pw)
    out = np.zeros(shape)
    out[:, :, : Hp * ph, : Wp * pw] = spread
    return out


def _as_batch(spec: NetworkSpec, x) -> np.ndarray:
    x = np.asarray(getattr(x, "matrix", x), dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.shape[1:] != spec.input_shape:
        raise ValueError(f"input shape {x.shape[1:]} does not match network input {spec.input_shape}")
    return np.ascontiguousarray(x)


def _forward(params: NetworkParams, x: np.ndarray):
    spec = params.spec
    k = _kernels.backend
    conv_pre = k.conv_forward(x, params["conv_w"], params["conv_b"])
    conv_act = np.maximum(conv_pre, 0.0)
    pooled, arg = _pool(conv_act, spec.pool_window, spec.pool_mode)
    flat = pooled.reshape(len(x), -1)
    hidden_pre = flat @ params["hidden_w"] + params["hidden_b"]
    hidden = np.maximum(hidden_pre, 0.0)
    logit = (hidden @ params["out_w"] + params["out_b"])[:, 0]
    prob = expit(logit)
    cache = dict(x=x, conv_pre=conv_pre, conv_act=conv_act, arg=arg, flat=flat, hidden_pre=hidden_pre, hidden=hidden)
    return prob, hidden, cache


def forward(params: NetworkParams, x):
    """Probability and hidden-layer features for one embedding or a batch.

    A single 2 x F embedding returns ``(float, (hidden,) array)``; a batch
    returns ``((B,), (B, hidden))`` arrays.
    """
    single = np.asarray(getattr(x, "matrix", x)).ndim == 2
    prob, hidden, _ = _forward(params, _as_batch(params.spec, x))
    if single:
        return float(prob[0]), hidden[0]
    return prob, hidden


def extract_features(params: NetworkParams, x, chunk: int = 2048) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        return np.zeros((0, params.spec.hidden_units))
    return np.vstack([forward(params, x[s : s + chunk])[1] for s in range(0, len(x), chunk)])


def l2_penalty(params: NetworkParams, delta: float) -> float:
    return 0.5 * delta * sum(float(np.sum(params[n] ** 2)) for n in WEIGHT_NAMES)


def _bce(prob, y):
    p = np.clip(prob, EPS, 1.0 - EPS)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def loss(params: NetworkParams, x, y, delta: float) -> float:
    """Mean binary cross-entropy plus (delta/2) * sum of squared weights (biases excluded)."""
    x = _as_batch(params.spec, x)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) == 0:
        raise ValueError("empty batch")
    prob, _, _ = _forward(params, x)
    return _bce(prob, y) + l2_penalty(params, delta)


def gradients(params: NetworkParams, x, y, delta: float) -> dict[str, np.ndarray]:
    """Analytic gradient of ``loss`` with respect to every parameter tensor."""
    spec = params.spec
    x = _as_batch(spec, x)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    prob, hidden, c = _forward(params, x)
    B = len(y)
    live = (prob > EPS) & (prob < 1.0 - EPS)
    d_logit = np.where(live, prob - y, 0.0) / B

    grads = {
        "out_w": hidden.T @ d_logit[:, None],
        "out_b": np.array([d_logit.sum()]),
    }
    d_hidden = d_logit[:, None] @ params["out_w"].T
    d_hidden_pre = d_hidden * (c["hidden_pre"] > 0)
    grads["hidden_w"] = c["flat"].T @ d_hidden_pre
    grads["hidden_b"] = d_hidden_pre.sum(axis=0)
    d_pooled = (d_hidden_pre @ params["hidden_w"].T).reshape(B, spec.conv_filters, *spec.pooled_shape)
    d_conv_act = _unpool(d_pooled, c["arg"], c["conv_act"].shape, spec.pool_window, spec.pool_mode)
    d_conv_pre = np.ascontiguousarray(d_conv_act * (c["conv_pre"] > 0))
    grads["conv_w"] = _kernels.backend.conv_backward(x, d_conv_pre, *spec.conv_kernel)
    grads["conv_b"] = d_conv_pre.sum(axis=(0, 2, 3))
    for name in WEIGHT_NAMES:
        grads[name] = grads[name] + delta * params[name]
    return grads


@dataclass
class TrainResult:
    params: NetworkParams
    loss_trace: list[float] = field(default_factory=list)


def train(
    spec: NetworkSpec, cfg: TrainConfig, x, y, init_seed: int | None = None, batch_seed: int | None = None
) -> TrainResult:
    """Mini-batch gradient descent from a Glorot initialisation.

    ``loss_trace[0]`` is the full-data loss at initialisation and
    ``loss_trace[e]`` the loss after epoch ``e``.
    """
    x = _as_batch(spec, x)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) == 0 or len(y) != len(x):
        raise ValueError("training data must be non-empty and aligned")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("training data needs both labels")
    params = init_params(spec, cfg.seed if init_seed is None else init_seed)
    rng = np.random.default_rng(cfg.seed if batch_seed is None else batch_seed)
    trace = [loss(params, x, y, cfg.l2_strength)]
    for _ in range(cfg.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = gradients(params, x[idx], y[idx], cfg.l2_strength)
            for name in PARAM_NAMES:
                if not np.all(np.isfinite(grads[name])):
                    raise NumericalError(f"non-finite gradient in layer {name}")
                params.tensors[name] -= cfg.learning_rate * grads[name]
        trace.append(loss(params, x, y, cfg.l2_strength))
        if not np.isfinite(trace[-1]):
            raise NumericalError("training loss became non-finite")
    return TrainResult(params, trace)


def _pattern(params: NetworkParams, x):
    _, _, c = _forward(params, x)
    arg = c["arg"] if c["arg"] is not None else 0
    return c["conv_pre"] > 0, c["hidden_pre"] > 0, arg


def _same_pattern(a, b) -> bool:
    return all(np.array_equal(u, v) for u, v in zip(a, b))


def gradient_check(
    params: NetworkParams,
    x,
    y,
    delta: float = 0.0,
    step: float = 1e-5,
    sample: int = 200,
    seed: int = 0,
    grad_fn=None,
    floor: float = 1e-6,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Tensors with more than ``sample`` entries are checked on a seeded
    sample of that many entries. The relative error is
    ``|a - n| / max(|a|, |n|, floor)``. A perturbation that flips a ReLU
    or pooling decision is retried with a 10x smaller step, and skipped if
    it still straddles the kink.
    """
    x = _as_batch(params.spec, x)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    grad_fn = gradients if grad_fn is None else grad_fn
    analytic = grad_fn(params, x, y, delta)
    base = _pattern(params, x)
    rng = np.random.default_rng(seed)
    probe = params.copy()
    worst = 0.0
    for name in PARAM_NAMES:
        tensor = probe.tensors[name]
        flat = tensor.reshape(-1)
        if flat.size > sample:
            picks = rng.choice(flat.size, size=sample, replace=False)
        else:
            picks = np.arange(flat.size)
        for k in picks:
            orig = flat[k]
            numeric = None
            h = step
            for _ in range(3):
                flat[k] = orig + h
                plus, pat_plus = loss(probe, x, y, delta), _pattern(probe, x)
                flat[k] = orig - h
                minus, pat_minus = loss(probe, x, y, delta), _pattern(probe, x)
                flat[k] = orig
                if _same_pattern(base, pat_plus) and _same_pattern(base, pat_minus):
                    numeric = (plus - minus) / (2 * h)
                    break
                h /= 10
            if numeric is None:
                continue
            a = float(analytic[name].reshape(-1)[k])
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    return worst
