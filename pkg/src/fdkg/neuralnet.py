"""Fully connected feature-mapping network with manual backprop.

Hidden layers use ReLU (subgradient 0 at exactly 0), the output layer uses a
sigmoid so predictions live in (0, 1) like the normalized target features.
A linear output head is supported for hand-checkable scalar models and
gradient diagnostics.  All arithmetic is float64; the loss is the batch mean
of per-sample squared L2 errors, with no further division by the feature
dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

RHO1_DEFAULT = 0.9
RHO2_DEFAULT = 0.999
ADAM_EPS = 1e-8


@dataclass
class NetworkParams:
    """Dense-layer weights/biases; weights[m] has shape (dims[m+1], dims[m])."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "sigmoid"  # or "linear"

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError(f"invalid layer dims {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("weights/biases count must be len(dims) - 1")
        for m, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[m + 1], dims[m]) or b.shape != (dims[m + 1],):
                raise ValueError(f"layer {m}: shape {w.shape}/{b.shape} breaks the chain {dims}")
        if self.output_activation not in ("sigmoid", "linear"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        self.layer_dims = dims

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            output_activation=self.output_activation,
        )

    def allclose(self, other: "NetworkParams", atol: float = 0.0) -> bool:
        return self.layer_dims == other.layer_dims and all(
            np.allclose(a, b, rtol=0.0, atol=atol)
            for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


@dataclass
class Gradients:
    """Loss gradients shaped like the network's weights and biases."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(
            d_weights=[factor * g for g in self.d_weights],
            d_biases=[factor * g for g in self.d_biases],
        )

    def add_(self, other: "Gradients") -> None:
        for a, b in zip(self.d_weights, other.d_weights):
            a += b
        for a, b in zip(self.d_biases, other.d_biases):
            a += b

    @classmethod
    def zeros_like(cls, net: NetworkParams) -> "Gradients":
        return cls(
            d_weights=[np.zeros_like(w) for w in net.weights],
            d_biases=[np.zeros_like(b) for b in net.biases],
        )


@dataclass
class AdamState:
    """First/second moment estimates and step counter for ADAM."""

    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    step_count: int = 0
    rho1: float = RHO1_DEFAULT
    rho2: float = RHO2_DEFAULT
    epsilon_stab: float = ADAM_EPS


def init_adam_state(
    net: NetworkParams, rho1: float = RHO1_DEFAULT, rho2: float = RHO2_DEFAULT
) -> AdamState:
    return AdamState(
        m_weights=[np.zeros_like(w) for w in net.weights],
        v_weights=[np.zeros_like(w) for w in net.weights],
        m_biases=[np.zeros_like(b) for b in net.biases],
        v_biases=[np.zeros_like(b) for b in net.biases],
        rho1=rho1,
        rho2=rho2,
    )


@dataclass(frozen=True)
class TrainConfig:
    """Minibatch ADAM training parameters."""

    batch_size: int = 128
    learning_rate: float = 1e-3
    max_iterations: int = 10000
    seed: int = 0
    eval_interval: int = 25

    def __post_init__(self) -> None:
        if self.batch_size <= 0 or self.learning_rate <= 0 or self.eval_interval <= 0:
            raise ValueError("batch_size, learning_rate and eval_interval must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")


def init_network(
    dims: list[int] | tuple[int, ...], seed: int, output_activation: str = "sigmoid"
) -> NetworkParams:
    """He-initialized weights (variance 2/fan_in) and zero biases."""
    dims = tuple(int(d) for d in dims)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return NetworkParams(
        layer_dims=dims, weights=weights, biases=biases, output_activation=output_activation
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_trace(net: NetworkParams, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Return per-layer pre-activations and activations (activations[0] = input)."""
    activations = [x]
    pre_acts = []
    a = x
    last = net.n_layers - 1
    for m, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre_acts.append(z)
        if m < last:
            a = np.maximum(z, 0.0)
        elif net.output_activation == "sigmoid":
            a = _sigmoid(z)
        else:
            a = z
        activations.append(a)
    return pre_acts, activations


def forward(net: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Map inputs through the network; accepts one vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.shape[1] != net.layer_dims[0]:
        raise ValueError(f"input dim {x2.shape[1]} != network input dim {net.layer_dims[0]}")
    _, activations = _forward_trace(net, x2)
    out = activations[-1]
    return out[0] if single else out


def mse_loss(outputs: np.ndarray, targets: np.ndarray) -> float:
    """Batch mean of per-sample squared L2 errors."""
    outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if outputs.shape != targets.shape:
        raise ValueError(f"shape mismatch: {outputs.shape} vs {targets.shape}")
    if outputs.shape[0] == 0:
        raise ValueError("empty batch")
    diff = outputs - targets
    return float(np.mean(np.sum(diff * diff, axis=1)))


def backward(
    net: NetworkParams, inputs: np.ndarray, targets: np.ndarray
) -> tuple[float, Gradients]:
    """Loss and its exact analytic gradient w.r.t. every weight and bias."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y.shape[0]:
        raise ValueError("inputs and targets must have the same batch size")
    n_batch = x.shape[0]
    pre_acts, activations = _forward_trace(net, x)
    out = activations[-1]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite activations in forward pass")
    loss = mse_loss(out, y)

    d_weights: list[np.ndarray] = [None] * net.n_layers  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * net.n_layers  # type: ignore[list-item]
    delta = (2.0 / n_batch) * (out - y)
    if net.output_activation == "sigmoid":
        delta = delta * out * (1.0 - out)
    for m in range(net.n_layers - 1, -1, -1):
        d_weights[m] = delta.T @ activations[m]
        d_biases[m] = delta.sum(axis=0)
        if m > 0:
            delta = (delta @ net.weights[m]) * (pre_acts[m - 1] > 0.0)
    return loss, Gradients(d_weights=d_weights, d_biases=d_biases)


def adam_step(
    net: NetworkParams, grads: Gradients, state: AdamState, lr: float
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected ADAM update; returns new params and state."""
    t = state.step_count + 1
    c1 = 1.0 - state.rho1**t
    c2 = 1.0 - state.rho2**t

    def update(theta, g, m, v):
        m_new = state.rho1 * m + (1.0 - state.rho1) * g
        v_new = state.rho2 * v + (1.0 - state.rho2) * (g * g)
        step = lr * (m_new / c1) / (np.sqrt(v_new / c2) + state.epsilon_stab)
        return theta - step, m_new, v_new

    new_w, new_mw, new_vw = [], [], []
    for w, g, m, v in zip(net.weights, grads.d_weights, state.m_weights, state.v_weights):
        wn, mn, vn = update(w, g, m, v)
        new_w.append(wn)
        new_mw.append(mn)
        new_vw.append(vn)
    new_b, new_mb, new_vb = [], [], []
    for b, g, m, v in zip(net.biases, grads.d_biases, state.m_biases, state.v_biases):
        bn, mn, vn = update(b, g, m, v)
        new_b.append(bn)
        new_mb.append(mn)
        new_vb.append(vn)

    new_net = NetworkParams(
        layer_dims=net.layer_dims,
        weights=new_w,
        biases=new_b,
        output_activation=net.output_activation,
    )
    new_state = replace(
        state,
        m_weights=new_mw,
        v_weights=new_vw,
        m_biases=new_mb,
        v_biases=new_vb,
        step_count=t,
    )
    return new_net, new_state


def sgd_step(net: NetworkParams, grads: Gradients, lr: float) -> NetworkParams:
    """Plain gradient descent: theta <- theta - lr * g."""
    return NetworkParams(
        layer_dims=net.layer_dims,
        weights=[w - lr * g for w, g in zip(net.weights, grads.d_weights)],
        biases=[b - lr * g for b, g in zip(net.biases, grads.d_biases)],
        output_activation=net.output_activation,
    )
