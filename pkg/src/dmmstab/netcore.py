"""Feedforward networks with the activation metadata used by the analyses.

A network maps ``x`` through ``h <- act(W h + b)`` for every hidden layer
and ends with an affine output layer (identity activation).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import ShapeError

# Fixed reference constants of the self-normalising ELU.
SELU_ALPHA = 1.6732632423543772848170429916717
SELU_SCALE = 1.0507009873554804934193349852946

KINDS = ("identity", "relu", "leaky_relu", "tanh", "sigmoid", "selu", "softplus")


@dataclass(frozen=True)
class Activation:
    """Elementwise activation with its analytic metadata.

    ``slope`` is only meaningful for ``leaky_relu`` (negative-side slope).
    """

    kind: str = "identity"
    slope: float = 0.01

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation {self.kind!r}; expected one of {KINDS}")
        if self.kind == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ValueError("leaky_relu slope must lie in (0, 1)")

    @classmethod
    def parse(cls, spec: "str | Activation") -> "Activation":
        """Build from ``"relu"``, ``"leaky_relu"`` or ``"leaky_relu:0.2"``."""
        if isinstance(spec, Activation):
            return spec
        name, _, arg = str(spec).strip().lower().partition(":")
        name = {"leakyrelu": "leaky_relu", "linear": "identity", "none": "identity"}.get(name, name)
        if arg:
            return cls(name, float(arg))
        return cls(name)

    @property
    def name(self) -> str:
        if self.kind == "leaky_relu" and self.slope != 0.01:
            return f"leaky_relu:{self.slope!r}"
        return self.kind

    @property
    def value_at_zero(self) -> float:
        if self.kind == "sigmoid":
            return 0.5
        if self.kind == "softplus":
            return math.log(2.0)
        return 0.0

    @property
    def max_slope(self) -> float:
        """Global Lipschitz constant over the real line."""
        if self.kind == "sigmoid":
            return 0.25
        if self.kind == "selu":
            # left derivative at 0 is scale*alpha, the supremum of the slope
            return SELU_SCALE * SELU_ALPHA
        return 1.0

    @property
    def slope_at_zero(self) -> float:
        """Derivative at 0 (right derivative for the kinked activations)."""
        if self.kind == "sigmoid":
            return 0.25
        if self.kind == "softplus":
            return 0.5
        if self.kind == "selu":
            return SELU_SCALE
        return 1.0

    @property
    def left_slope_at_zero(self) -> float:
        if self.kind == "relu":
            return 0.0
        if self.kind == "leaky_relu":
            return self.slope
        if self.kind == "selu":
            return SELU_SCALE * SELU_ALPHA
        return self.slope_at_zero

    @property
    def is_contractive(self) -> bool:
        return self.max_slope <= 1.0

    def __call__(self, z):
        return activation_apply(self, z)


def activation_apply(act: Activation, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    k = act.kind
    if k == "identity":
        return z.copy()
    if k == "relu":
        return np.maximum(z, 0.0)
    if k == "leaky_relu":
        return np.where(z > 0, z, act.slope * z)
    if k == "tanh":
        return np.tanh(z)
    if k == "sigmoid":
        return expit(z)
    if k == "softplus":
        return np.logaddexp(0.0, z)
    # selu
    return SELU_SCALE * np.where(z > 0, z, SELU_ALPHA * np.expm1(np.minimum(z, 0.0)))


IDENTITY = Activation("identity")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Layer:
    weight: np.ndarray
    bias: np.ndarray | None = None
    activation: Activation = IDENTITY

    def __post_init__(self):
        w = _frozen(self.weight)
        if w.ndim != 2 or w.size == 0:
            raise ShapeError(f"weight must be a nonempty 2-D matrix, got shape {w.shape}")
        object.__setattr__(self, "weight", w)
        if self.bias is not None:
            b = _frozen(self.bias).reshape(-1)
            if b.shape[0] != w.shape[0]:
                raise ShapeError(
                    f"bias length {b.shape[0]} does not match weight rows {w.shape[0]}"
                )
            object.__setattr__(self, "bias", b)
        object.__setattr__(self, "activation", Activation.parse(self.activation))

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.weight.shape[0]

    @property
    def bias_or_zero(self) -> np.ndarray:
        return self.bias if self.bias is not None else np.zeros(self.n_out)

    def to_dict(self) -> dict:
        return {
            "weight": self.weight.tolist(),
            "bias": None if self.bias is None else self.bias.tolist(),
            "activation": self.activation.name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Layer":
        return cls(np.asarray(d["weight"], dtype=float), d.get("bias"), Activation.parse(d["activation"]))


@dataclass(frozen=True, eq=False)
class FeedForwardNet:
    """Immutable stack of layers; the last one must be affine."""

    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].n_in != layers[i - 1].n_out:
                raise ShapeError(
                    f"layer {i} expects input width {layers[i].n_in} "
                    f"but layer {i - 1} produces {layers[i - 1].n_out}"
                )
        if layers[-1].activation.kind != "identity":
            raise ValueError(
                f"output layer must be affine (identity activation), got {layers[-1].activation.kind}"
            )
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_weights(
        cls,
        weights: Sequence,
        biases: Sequence | None = None,
        activation: "str | Activation" = "relu",
    ) -> "FeedForwardNet":
        """Hidden layers share ``activation``; the final layer is affine."""
        act = Activation.parse(activation)
        if biases is None:
            biases = [None] * len(weights)
        n = len(weights)
        return cls(tuple(
            Layer(w, b, act if i < n - 1 else IDENTITY)
            for i, (w, b) in enumerate(zip(weights, biases))
        ))

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def has_bias(self) -> bool:
        return any(l.bias is not None and np.any(l.bias != 0) for l in self.layers)

    def __call__(self, x):
        return eval_net(self, x)

    def to_dict(self) -> dict:
        return {"layers": [l.to_dict() for l in self.layers]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeedForwardNet":
        return cls(tuple(Layer.from_dict(l) for l in d["layers"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def load(cls, path) -> "FeedForwardNet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def eval_net(net: FeedForwardNet, x) -> np.ndarray:
    """Forward pass. ``x`` may be one vector ``(n,)`` or a batch ``(B, n)``."""
    h = np.asarray(x, dtype=np.float64)
    if h.ndim not in (1, 2):
        raise ShapeError(f"input must be 1-D or 2-D, got {h.ndim}-D")
    for i, layer in enumerate(net.layers):
        if h.shape[-1] != layer.n_in:
            raise ShapeError(f"layer {i} expects input width {layer.n_in}, got {h.shape[-1]}")
        # broadcast-and-sum keeps each row's arithmetic independent of batch size
        z = (h[..., None, :] * layer.weight).sum(axis=-1)
        if layer.bias is not None:
            z = z + layer.bias
        h = activation_apply(layer.activation, z)
    return h
