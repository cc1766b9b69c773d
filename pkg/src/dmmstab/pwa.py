"""Exact pointwise-affine form of a feedforward network.

At any input ``x`` a network satisfies ``net(x) = A(x) @ x + b(x)`` where
``A(x)`` chains the weights with diagonal activation-scaling matrices and
``b(x)`` collects the biases together with the ``act(0)`` offsets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ShapeError
from .netcore import SELU_ALPHA, SELU_SCALE, Activation, FeedForwardNet, activation_apply


@dataclass(frozen=True, eq=False)
class ActivationPattern:
    """Diagonal of the scaling matrix and the ``act(0)`` offset vector."""

    entries: np.ndarray
    offset: np.ndarray

    def apply(self, z):
        return self.entries * np.asarray(z, dtype=float) + self.offset


@dataclass(frozen=True, eq=False)
class PwaForm:
    a_matrix: np.ndarray
    b_vector: np.ndarray
    anchor: np.ndarray

    def to_dict(self) -> dict:
        return {"A": self.a_matrix.tolist(), "b": self.b_vector.tolist(), "anchor": self.anchor.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PwaForm":
        return cls(np.asarray(d["A"], float), np.asarray(d["b"], float), np.asarray(d["anchor"], float))


def _secant(act: Activation, z: np.ndarray) -> np.ndarray:
    """(act(z) - act(0)) / z for z != 0, written to avoid cancellation."""
    k = act.kind
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if k == "identity":
            return np.ones_like(z)
        if k == "relu":
            return (z > 0).astype(float)
        if k == "leaky_relu":
            return np.where(z > 0, 1.0, act.slope)
        if k == "tanh":
            return np.tanh(z) / z
        if k == "sigmoid":
            # expit(z) - 1/2 == tanh(z/2)/2
            return 0.5 * np.tanh(0.5 * z) / z
        if k == "softplus":
            small = np.log1p(0.5 * np.expm1(np.minimum(z, 1.0))) / z
            large = (np.logaddexp(0.0, z) - np.log(2.0)) / z
            return np.where(np.abs(z) <= 1.0, small, large)
        # selu
        neg = SELU_SCALE * SELU_ALPHA * np.expm1(np.minimum(z, 0.0)) / z
        return np.where(z > 0, SELU_SCALE, neg)


def lambda_pattern(act: Activation, z, eps: float = TOL.lambda_eps) -> ActivationPattern:
    """Activation pattern so that ``entries * z + offset == act(z)``.

    Below ``eps`` the analytic slope at zero replaces the ratio (the
    one-sided slope for activations with a kink at zero).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = np.asarray(z, dtype=np.float64)
    act = Activation.parse(act)
    entries = _secant(act, z)
    near = np.abs(z) < eps
    if np.any(near):
        limit = np.where(z > 0, act.slope_at_zero, np.where(z < 0, act.left_slope_at_zero, act.slope_at_zero))
        entries = np.where(near, limit, entries)
    offset = np.full_like(z, act.value_at_zero)
    return ActivationPattern(entries, offset)


def extract_batch(net: FeedForwardNet, xs) -> tuple[np.ndarray, np.ndarray]:
    """PWA forms for a batch of anchors.

    Returns ``A`` with shape ``(B, n_out, n_in)`` and ``b`` with shape
    ``(B, n_out)``. One forward sweep; the offset terms are folded into
    ``b`` layer by layer.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2:
        raise ShapeError("extract_batch expects a 2-D batch of anchors")
    if xs.shape[1] != net.n_in:
        raise ShapeError(f"layer 0 expects input width {net.n_in}, got {xs.shape[1]}")
    B = xs.shape[0]
    h = xs
    a = np.broadcast_to(np.eye(net.n_in), (B, net.n_in, net.n_in))
    c = np.zeros((B, net.n_in))
    for layer in net.layers:
        z = h @ layer.weight.T + layer.bias_or_zero
        az = np.einsum("ij,bjk->bik", layer.weight, a)
        cz = c @ layer.weight.T + layer.bias_or_zero
        if layer.activation.kind == "identity":
            a, c, h = az, cz, z
            continue
        pat = lambda_pattern(layer.activation, z)
        a = pat.entries[:, :, None] * az
        c = pat.entries * cz + pat.offset
        h = activation_apply(layer.activation, z)
    return a, c


def extract(net: FeedForwardNet, x) -> PwaForm:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    a, b = extract_batch(net, x[None, :])
    return PwaForm(a[0], b[0], x.copy())


def reconstruct(form: PwaForm, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != form.a_matrix.shape[1]:
        raise ShapeError(f"form expects input width {form.a_matrix.shape[1]}, got {x.shape[-1]}")
    return x @ form.a_matrix.T + form.b_vector
