"""Hypothesis classes: a linear scorer and a one-hidden-layer relu scorer,
with exact analytic gradients, a decoupled-weight-decay Adam optimizer, and
JSON-friendly serialization.

Parameters live in plain dicts of numpy arrays so the optimizer is shared
between architectures.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError, ShapeError


@dataclass
class LinearModel:
    weights: np.ndarray  # (d,)
    bias: np.ndarray  # (1,)

    kind = "linear"

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}


@dataclass
class MlpModel:
    w1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h,)
    b2: np.ndarray  # (1,)
    activation: str = "relu"

    kind = "mlp"

    @property
    def dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


Model = LinearModel | MlpModel


def init_model(kind: str, dim: int, hidden: int = 64, seed: int = 0) -> Model:
    """Uniform fan-in-scaled weights, zero biases, deterministic under seed."""
    if dim < 1:
        raise InvalidInputError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if kind == "linear":
        bound = 1.0 / np.sqrt(dim)
        return LinearModel(
            weights=rng.uniform(-bound, bound, size=dim),
            bias=np.zeros(1),
        )
    if kind == "mlp":
        if hidden < 1:
            raise InvalidInputError(f"hidden width must be >= 1, got {hidden}")
        b_in = 1.0 / np.sqrt(dim)
        b_hid = 1.0 / np.sqrt(hidden)
        return MlpModel(
            w1=rng.uniform(-b_in, b_in, size=(hidden, dim)),
            b1=np.zeros(hidden),
            w2=rng.uniform(-b_hid, b_hid, size=hidden),
            b2=np.zeros(1),
        )
    raise InvalidInputError(f"unknown model kind {kind!r}")


def _as_batch(model: Model, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.dim:
        raise ShapeError(
            f"input shape {np.asarray(x).shape} incompatible with model dim {model.dim}"
        )
    return arr, single


def forward(model: Model, x) -> float | np.ndarray:
    """Score one vector (returns float) or a batch (returns (n,) array)."""
    arr, single = _as_batch(model, x)
    if isinstance(model, LinearModel):
        out = arr @ model.weights + model.bias[0]
    else:
        h = np.maximum(arr @ model.w1.T + model.b1, 0.0)
        out = h @ model.w2 + model.b2[0]
    return float(out[0]) if single else out


def backward(model: Model, x, upstream) -> dict[str, np.ndarray]:
    """Exact gradients of sum_i upstream_i * f(x_i) with respect to every
    parameter. Accepts a single vector with scalar upstream or a batch with
    per-row upstream. The relu subgradient at 0 is 0."""
    arr, single = _as_batch(model, x)
    up = np.atleast_1d(np.asarray(upstream, dtype=float))
    if up.shape != (arr.shape[0],):
        raise ShapeError(f"upstream shape {up.shape} does not match batch {arr.shape[0]}")
    if not np.all(np.isfinite(up)):
        raise InvalidInputError("upstream must be finite")
    if isinstance(model, LinearModel):
        return {"weights": up @ arr, "bias": np.array([up.sum()])}
    pre = arr @ model.w1.T + model.b1
    h = np.maximum(pre, 0.0)
    act_mask = (pre > 0).astype(float)
    dh = np.outer(up, model.w2) * act_mask  # (n, h)
    return {
        "w1": dh.T @ arr,
        "b1": dh.sum(axis=0),
        "w2": up @ h,
        "b2": np.array([up.sum()]),
    }


@dataclass
class AdamState:
    """Adam with bias correction; weight decay is decoupled (applied as a
    multiplicative shrink before the Adam delta)."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **hyper) -> "AdamState":
        state = cls(**hyper)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One in-place update of params; returns them with the advanced state."""
    state.step += 1
    t = state.step
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != param shape {p.shape} for {key!r}")
        if state.weight_decay:
            p *= 1.0 - state.lr * state.weight_decay
        m = state.m[key]
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state


def serialize_model(model: Model, config_echo: dict | None = None) -> dict:
    """Structured-text document: kind, dimensions, flat row-major parameter
    arrays, plus an optional training-config echo for provenance."""
    doc: dict = {"kind": model.kind, "dim": model.dim}
    if isinstance(model, MlpModel):
        doc["hidden"] = model.hidden
        doc["activation"] = model.activation
    doc["params"] = {k: p.ravel().tolist() for k, p in model.params().items()}
    if config_echo is not None:
        doc["config"] = config_echo
    return doc


def deserialize_model(doc: dict) -> Model:
    params = {k: np.asarray(v, dtype=float) for k, v in doc["params"].items()}
    if doc["kind"] == "linear":
        return LinearModel(weights=params["weights"], bias=params["bias"])
    if doc["kind"] == "mlp":
        h, d = doc["hidden"], doc["dim"]
        return MlpModel(
            w1=params["w1"].reshape(h, d),
            b1=params["b1"],
            w2=params["w2"],
            b2=params["b2"],
            activation=doc.get("activation", "relu"),
        )
    raise InvalidInputError(f"unknown model kind {doc['kind']!r}")
