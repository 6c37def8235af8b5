"""Minimal dense feed-forward networks with exact reverse-mode gradients.

One flat parameter vector per network (row-major weights, then bias, per
layer). The output layer is always linear; softmax / log-sum-exp belongs to
the policy layer on top.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractError, ShapeError

ACTIVATIONS = ("tanh", "relu", "mish")


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "mish":
        return z * np.tanh(_softplus(z))
    raise ConfigurationError(f"unknown activation {name!r}")


def _act_deriv(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "mish":
        sp = _softplus(z)
        t = np.tanh(sp)
        sig = 1.0 / (1.0 + np.exp(-z))
        return t + z * sig * (1.0 - t * t)
    raise ConfigurationError(f"unknown activation {name!r}")


def param_count(layer_sizes: Sequence[int]) -> int:
    return sum(
        n_in * n_out + n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:])
    )


@dataclass(frozen=True)
class Mlp:
    """Feed-forward net: layer sizes, hidden activation, flat parameter vector."""

    layer_sizes: tuple[int, ...]
    activation: str
    params: np.ndarray  # float64, length param_count(layer_sizes)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def with_params(self, params: np.ndarray) -> "Mlp":
        if params.shape != self.params.shape:
            raise ShapeError(
                f"params length {params.shape} != expected {self.params.shape}"
            )
        return replace(self, params=np.asarray(params, dtype=np.float64))


def _validate_spec(layer_sizes: Sequence[int], activation: str) -> None:
    if len(layer_sizes) < 2 or any(n < 1 for n in layer_sizes):
        raise ConfigurationError(f"invalid layer sizes {list(layer_sizes)}")
    if activation not in ACTIVATIONS:
        raise ConfigurationError(
            f"activation must be one of {ACTIVATIONS}, got {activation!r}"
        )


def init_params(layer_sizes: Sequence[int], activation: str, seed: int) -> Mlp:
    """Glorot-uniform weights, zero biases, reproducible for a given seed."""
    _validate_spec(layer_sizes, activation)
    rng = np.random.default_rng(seed)
    chunks = []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        s = np.sqrt(6.0 / (n_in + n_out))
        chunks.append(rng.uniform(-s, s, size=n_in * n_out))
        chunks.append(np.zeros(n_out))
    return Mlp(tuple(layer_sizes), activation, np.concatenate(chunks))


def unpack(net: Mlp) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split the flat vector into per-layer (W, b); W has shape (n_out, n_in)."""
    out = []
    offset = 0
    for n_in, n_out in zip(net.layer_sizes[:-1], net.layer_sizes[1:]):
        w = net.params[offset : offset + n_in * n_out].reshape(n_out, n_in)
        offset += n_in * n_out
        b = net.params[offset : offset + n_out]
        offset += n_out
        out.append((w, b))
    return out


def _forward_batch_cached(net: Mlp, x: np.ndarray):
    """Forward on a batch (N, in_dim); returns (output, activations, pre-acts)."""
    layers = unpack(net)
    hs = [x]  # post-activation values, hs[0] = input
    zs = []  # pre-activation values per layer
    h = x
    for i, (w, b) in enumerate(layers):
        z = h @ w.T + b
        zs.append(z)
        h = z if i == len(layers) - 1 else _act(net.activation, z)
        hs.append(h)
    return h, hs, zs


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Final-layer pre-activation for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ShapeError(f"input shape {x.shape} != ({net.input_dim},)")
    out, _, _ = _forward_batch_cached(net, x[None, :])
    return out[0]


def forward_batch(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Forward on a batch of inputs, shape (N, in_dim) -> (N, out_dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(f"batch shape {x.shape} incompatible with input dim {net.input_dim}")
    out, _, _ = _forward_batch_cached(net, x)
    return out


def backward_weighted(net: Mlp, x: np.ndarray, output_weights: np.ndarray) -> np.ndarray:
    """Gradient of output_weights . forward(net, x) w.r.t. the flat params."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(output_weights, dtype=np.float64)
    if w.shape != (net.output_dim,):
        raise ShapeError(f"output_weights shape {w.shape} != ({net.output_dim},)")
    return backward_weighted_batch(net, x[None, :], w[None, :])[0]

def backward_weighted_batch(
    net: Mlp, x: np.ndarray, output_weights: np.ndarray
) -> np.ndarray:
    """Per-sample gradients of output_weights[n] . forward(net, x[n]).

    x: (N, in_dim), output_weights: (N, out_dim) -> gradients (N, D).
    A single vectorized reverse sweep; rows are exact reverse-mode gradients.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(output_weights, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(f"batch shape {x.shape} incompatible with input dim {net.input_dim}")
    if v.shape != (x.shape[0], net.output_dim):
        raise ShapeError(
            f"output_weights shape {v.shape} != ({x.shape[0]}, {net.output_dim})"
        )
    layers = unpack(net)
    _, hs, zs = _forward_batch_cached(net, x)
    n = x.shape[0]
    grads = np.empty((n, net.params.size))
    delta = v
    # walk layers backwards, filling the flat gradient from the tail
    offset = net.params.size
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        n_out, n_in = w.shape
        offset -= n_out
        grads[:, offset : offset + n_out] = delta
        offset -= n_in * n_out
        grads[:, offset : offset + n_in * n_out] = np.einsum(
            "ni,nj->nij", delta, hs[i]
        ).reshape(n, n_in * n_out)
        if i > 0:
            delta = (delta @ w) * _act_deriv(net.activation, zs[i - 1])
    return grads


def finite_diff_grad(
    f: Callable[[np.ndarray], float], p: np.ndarray, step: float
) -> np.ndarray:
    """Central-difference gradient of a scalar function; test oracle only."""
    if step <= 0:
        raise ContractError(f"step must be positive, got {step}")
    p = np.asarray(p, dtype=np.float64)
    g = np.zeros_like(p)
    for i in range(p.size):
        hi = p.copy()
        lo = p.copy()
        hi[i] += step
        lo[i] -= step
        g[i] = (f(hi) - f(lo)) / (2.0 * step)
    return g
