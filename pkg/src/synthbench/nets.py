"""Small fully-connected nets with hand-written backprop.

All generator models share this substrate. Layers hold float64 weight
matrices, outputs are raw (the final activation tag is usually
"linear"; trainers apply sigmoid where they need probabilities so loss
gradients can be formed on logits without overflow).

Gradients come in two flavours: summed over the batch (the scale the
caller encodes in grad_out) and per-sample, which the DPGAN mechanism
needs for per-example clipping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


class TrainingDivergedError(RuntimeError):
    """Raised when a training step produces a non-finite loss or parameter."""

    def __init__(self, epoch: int, batch: int, what: str):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite {what} at epoch {epoch}, batch {batch}")


@dataclass
class MlpNet:
    """Feed-forward net: weights[l] is (fan_in, fan_out), one activation per layer."""

    sizes: tuple[int, ...]
    activations: tuple[str, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)

    @property
    def in_width(self) -> int:
        return self.sizes[0]

    @property
    def out_width(self) -> int:
        return self.sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


def init_mlp(sizes, activations, rng: np.random.Generator) -> MlpNet:
    """He-scaled init for relu layers, Xavier otherwise; zero biases."""
    sizes = tuple(int(s) for s in sizes)
    activations = tuple(activations)
    if len(activations) != len(sizes) - 1:
        raise ValueError(f"{len(sizes) - 1} layers need {len(sizes) - 1} activations")
    for a in activations:
        if a not in ACTIVATIONS:
            raise ValueError(f"unknown activation {a!r}")
    net = MlpNet(sizes=sizes, activations=activations)
    for fan_in, fan_out, act in zip(sizes, sizes[1:], activations):
        scale = np.sqrt(2.0 / fan_in) if act == "relu" else np.sqrt(1.0 / fan_in)
        net.weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
        net.biases.append(np.zeros(fan_out))
    return net


def _act(x: np.ndarray, tag: str) -> np.ndarray:
    if tag == "relu":
        return np.maximum(x, 0.0)
    if tag == "sigmoid":
        return sigmoid(x)
    if tag == "tanh":
        return np.tanh(x)
    return x


def _act_grad(pre: np.ndarray, post: np.ndarray, tag: str) -> np.ndarray:
    if tag == "relu":
        return (pre > 0).astype(np.float64)
    if tag == "sigmoid":
        return post * (1.0 - post)
    if tag == "tanh":
        return 1.0 - post * post
    return np.ones_like(pre)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward(net: MlpNet, inputs: np.ndarray):
    """Run the net; returns (output, cache) where cache feeds backward()."""
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_width:
        raise ValueError(f"expected (N, {net.in_width}) inputs, got {x.shape}")
    cache = []
    for w, b, tag in zip(net.weights, net.biases, net.activations):
        pre = x @ w + b
        post = _act(pre, tag)
        cache.append((x, pre, post, tag))
        x = post
    return x, cache


def backward(net: MlpNet, cache, grad_out: np.ndarray):
    """Backprop grad_out (dL/doutput, batch-aggregated) through the net.

    Returns ([(dW, db) per layer], dL/dinput). The caller bakes any 1/B
    normalisation into grad_out.
    """
    grads = [None] * len(net.weights)
    g = np.ascontiguousarray(grad_out, dtype=np.float64)
    for layer in range(len(net.weights) - 1, -1, -1):
        x, pre, post, tag = cache[layer]
        g = g * _act_grad(pre, post, tag)
        grads[layer] = (x.T @ g, g.sum(axis=0))
        g = g @ net.weights[layer].T
    return grads, g


def per_sample_backward(net: MlpNet, cache, grad_out: np.ndarray):
    """Like backward() but keeps the batch axis on every gradient.

    Returns ([(dW with shape (B, in, out), db with shape (B, out)) per
    layer], per-sample dL/dinput).
    """
    grads = [None] * len(net.weights)
    g = np.ascontiguousarray(grad_out, dtype=np.float64)
    for layer in range(len(net.weights) - 1, -1, -1):
        x, pre, post, tag = cache[layer]
        g = g * _act_grad(pre, post, tag)
        grads[layer] = (np.einsum("bi,bo->bio", x, g), g.copy())
        g = g @ net.weights[layer].T
    return grads, g


def bce_with_logits(logits: np.ndarray, targets: np.ndarray):
    """Summed-over-features, mean-over-batch BCE on raw logits.

    Returns (loss, dloss/dlogits). Stable for large |logits|.
    """
    t = np.ascontiguousarray(targets, dtype=np.float64)
    n = logits.shape[0]
    # log(1 + e^x) computed as max(x, 0) + log1p(e^-|x|)
    softplus = np.maximum(logits, 0.0) + np.log1p(np.exp(-np.abs(logits)))
    loss = float((softplus - logits * t).sum()) / n
    grad = (sigmoid(logits) - t) / n
    return loss, grad


LOSS_TAGS = ("bce", "squared_error", "gan_disc", "gan_gen")


def mlp_backprop(net: MlpNet, inputs: np.ndarray, loss: str, targets=None):
    """Forward + backward for one of the supported loss heads.

    bce / gan_disc    - sigmoid cross-entropy of the net output against
                        targets (mean over batch, summed over output units).
    gan_gen           - sigmoid cross-entropy against all-ones; `net` is
                        the discriminator and the returned input gradient
                        drives the upstream generator.
    squared_error     - summed squared error, no batch normalisation.

    Returns (loss_value, [(dW, db) per layer], dL/dinput).
    """
    out, cache = forward(net, inputs)
    if loss in ("bce", "gan_disc"):
        if targets is None:
            raise ValueError(f"loss {loss!r} needs targets")
        value, grad_out = bce_with_logits(out, targets)
    elif loss == "gan_gen":
        value, grad_out = bce_with_logits(out, np.ones_like(out))
    elif loss == "squared_error":
        if targets is None:
            raise ValueError("squared_error needs targets")
        diff = out - np.ascontiguousarray(targets, dtype=np.float64)
        value = float((diff * diff).sum())
        grad_out = 2.0 * diff
    else:
        raise ValueError(f"unknown loss tag {loss!r}; expected one of {LOSS_TAGS}")
    if not np.isfinite(value):
        raise FloatingPointError(f"non-finite {loss} loss")
    grads, grad_in = backward(net, cache, grad_out)
    return value, grads, grad_in


@dataclass
class AdamState:
    """Per-net Adam moments; step() mutates the net parameters in place."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_net(cls, net: MlpNet) -> "AdamState":
        params = net.parameters()
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(net: MlpNet, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    flat = []
    for gw, gb in grads:
        flat.extend([gw, gb])
    state.t += 1
    correct1 = 1.0 - beta1 ** state.t
    correct2 = 1.0 - beta2 ** state.t
    for p, g, m, v in zip(net.parameters(), flat, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / correct1) / (np.sqrt(v / correct2) + eps)


def sgd_step(net: MlpNet, grads, lr: float) -> None:
    for (gw, gb), w, b in zip(grads, net.weights, net.biases):
        w -= lr * gw
        b -= lr * gb


def check_finite(net: MlpNet, epoch: int, batch: int) -> None:
    for p in net.parameters():
        if not np.isfinite(p).all():
            raise TrainingDivergedError(epoch, batch, "parameter")
