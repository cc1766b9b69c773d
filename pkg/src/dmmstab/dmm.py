"""Deep Markov model with Gaussian transitions and identity emission.

``x_{t+1} ~ N(f(x_t), diag(softplus(g(x_t))**2))`` where ``f`` is the mean
network and ``g`` the raw variance network. A ``ParametricDmm`` rescales
``f`` by a radius-dependent factor to get expanding, marginal and
contracting regions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TOL
from .errors import DomainError, ShapeError
from .netcore import FeedForwardNet
from .pwa import extract_batch
from .spectral import layer_product_bound, norm_batch, vector_norm

SEED_SCHEME = "counter_v1"


def softplus(z):
    return np.logaddexp(0.0, z)


@dataclass(frozen=True, eq=False)
class DeepMarkovModel:
    mean_net: FeedForwardNet
    var_net: FeedForwardNet
    emission_kind: str = "identity"

    def __post_init__(self):
        n = self.mean_net.n_in
        if self.mean_net.n_out != n:
            raise ShapeError(f"mean network must map R^{n} to itself, got output width {self.mean_net.n_out}")
        if self.var_net.n_in != n or self.var_net.n_out != n:
            raise ShapeError(
                f"variance network must map R^{n} to R^{n} (diagonal mode), "
                f"got {self.var_net.n_in} -> {self.var_net.n_out}"
            )
        if self.emission_kind != "identity":
            raise ValueError("only the identity emission is implemented")

    @property
    def dim(self) -> int:
        return self.mean_net.n_in

    @property
    def base(self) -> "DeepMarkovModel":
        return self

    def mean(self, x) -> np.ndarray:
        return self.mean_net(_check(self, x))

    def std(self, x) -> np.ndarray:
        return softplus(self.var_net(_check(self, x)))

    def norm_scale(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1])

    def to_dict(self) -> dict:
        return {
            "mean_net": self.mean_net.to_dict(),
            "var_net": self.var_net.to_dict(),
            "regions": None,
            "seed_scheme": SEED_SCHEME,
        }


@dataclass(frozen=True)
class RegionSpec:
    """Radial bands ``(radius_low, radius_high, norm_scale)`` in the 2-norm.

    ``radius_high`` of the last band is ``inf``. Band edges are blended
    with a smoothstep of total width ``blend_width``.
    """

    bands: tuple
    blend_width: float = TOL.blend_width

    def __post_init__(self):
        bands = tuple((float(lo), math.inf if hi is None else float(hi), float(s)) for lo, hi, s in self.bands)
        if not bands:
            raise ValueError("need at least one band")
        if bands[0][0] != 0.0:
            raise ValueError("bands must start at radius 0")
        for (lo, hi, _), (lo2, _, _) in zip(bands, bands[1:]):
            if hi != lo2:
                raise ValueError(f"bands must be contiguous: edge {hi} vs next start {lo2}")
        for lo, hi, _ in bands:
            if not hi > lo:
                raise ValueError(f"empty band [{lo}, {hi})")
        if bands[-1][1] != math.inf:
            raise ValueError("last band must extend to infinity")
        if self.blend_width < 0:
            raise ValueError("blend_width must be nonnegative")
        widths = [hi - lo for lo, hi, _ in bands if hi != math.inf]
        if widths and self.blend_width > min(widths):
            raise ValueError("blend_width exceeds the narrowest band")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def three_region(cls, inner=20.0, outer=40.0, scales=(1.05, 1.0, 0.5), blend_width=TOL.blend_width):
        return cls(((0.0, inner, scales[0]), (inner, outer, scales[1]), (outer, math.inf, scales[2])), blend_width)

    @property
    def scales(self) -> list[float]:
        return [s for _, _, s in self.bands]

    def scale(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = np.full(r.shape, self.bands[0][2])
        w = self.blend_width
        for (_, edge, a), (_, _, b) in zip(self.bands, self.bands[1:]):
            if w == 0:
                step = (r >= edge).astype(float)
            else:
                t = np.clip((r - (edge - 0.5 * w)) / w, 0.0, 1.0)
                step = t * t * (3.0 - 2.0 * t)
            s = s + (b - a) * step
        return s

    def to_dict(self) -> dict:
        return {
            "bands": [[lo, None if hi == math.inf else hi, s] for lo, hi, s in self.bands],
            "blend_width": self.blend_width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegionSpec":
        return cls(tuple(tuple(b) for b in d["bands"]), d.get("blend_width", TOL.blend_width))


@dataclass(frozen=True, eq=False)
class ParametricDmm:
    base: DeepMarkovModel
    regions: RegionSpec

    def __post_init__(self):
        outer = self.regions.bands[-1][2] * layer_product_bound(self.base.mean_net, 2)
        if not outer < 1.0:
            raise ValueError(
                f"outermost band must contract: scale * product bound = {outer:.6g} >= 1"
            )

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def mean_net(self) -> FeedForwardNet:
        return self.base.mean_net

    @property
    def var_net(self) -> FeedForwardNet:
        return self.base.var_net

    def norm_scale(self, x) -> np.ndarray:
        return self.regions.scale(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))

    def mean(self, x) -> np.ndarray:
        x = _check(self, x)
        return self.norm_scale(x)[..., None] * self.base.mean_net(x)

    def std(self, x) -> np.ndarray:
        return self.base.std(x)

    def to_dict(self) -> dict:
        d = self.base.to_dict()
        d["regions"] = self.regions.to_dict()
        return d


def _check(model, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dim:
        raise ShapeError(f"model state dimension is {model.dim}, got {x.shape[-1]}")
    return x


@dataclass(frozen=True)
class StreamKey:
    """Position in the counter-based noise stream.

    The draw for ``(seed, traj_id, t)`` is row ``traj_id`` of the block
    produced by a Philox generator keyed by ``seed`` at counter ``t``.
    """

    seed: int = 0
    traj_id: int = 0
    t: int = 0

    def next(self) -> "StreamKey":
        return StreamKey(self.seed, self.traj_id, self.t + 1)


def noise_block(seed: int, t: int, n_traj: int, dim: int) -> np.ndarray:
    """Standard normals for trajectories ``0..n_traj-1`` at step ``t``."""
    gen = np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(t), 0]))
    return gen.standard_normal((n_traj, dim))


def mean_step(model, x) -> np.ndarray:
    return model.mean(x)


def sample_step(model, x, key: StreamKey):
    """One transition draw. Returns ``(x_next, key.next())``."""
    x = _check(model, x)
    eps = noise_block(key.seed, key.t, key.traj_id + 1, model.dim)[key.traj_id]
    return model.mean(x) + model.std(x) * eps, key.next()


def emission(model, x) -> np.ndarray:
    return np.array(x, dtype=float)


def effective_norm(model, x, p=2) -> float:
    """Operator norm of the (scaled) linear part of the mean map at ``x``."""
    x = _check(model, x).reshape(-1)
    if float(vector_norm(x, p)) == 0.0:
        raise DomainError("effective norm is evaluated away from the origin only")
    a, _ = extract_batch(model.mean_net, x[None])
    return float(model.norm_scale(x) * norm_batch(a, p)[0])


def effective_norm_batch(model, xs, p=2) -> np.ndarray:
    xs = _check(model, xs)
    a, _ = extract_batch(model.mean_net, xs)
    return model.norm_scale(xs) * norm_batch(a, p)


def transition_logpdf(model, x, x_next) -> float:
    x = _check(model, x)
    x_next = _check(model, x_next)
    mu, d = model.mean(x), model.std(x)
    r = (x_next - mu) / d
    return float(np.sum(-0.5 * r * r - np.log(d) - 0.5 * math.log(2.0 * math.pi), axis=-1))


def trajectory_logpdf(model, states) -> float:
    """Log-density of ``x_1..x_T`` given ``x_0``; identity emission adds nothing."""
    states = _check(model, states)
    return float(sum(transition_logpdf(model, states[t], states[t + 1]) for t in range(len(states) - 1)))


def model_from_dict(d: dict):
    if "layers" in d:
        raise ValueError("this is a network file, not a model file")
    base = DeepMarkovModel(FeedForwardNet.from_dict(d["mean_net"]), FeedForwardNet.from_dict(d["var_net"]))
    scheme = d.get("seed_scheme", SEED_SCHEME)
    if scheme != SEED_SCHEME:
        raise ValueError(f"unsupported seed scheme {scheme!r}")
    if d.get("regions"):
        return ParametricDmm(base, RegionSpec.from_dict(d["regions"]))
    return base


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))


def zero_variance_net(dim: int) -> FeedForwardNet:
    """Variance network whose softplus output is exactly zero."""
    return FeedForwardNet.from_weights([np.zeros((dim, dim))], [np.full(dim, -1e3)], "identity")
