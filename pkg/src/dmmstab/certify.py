"""Stability verdicts, sampled evidence, equilibrium bounds and penalties.

``certify_layerwise`` is a global certificate: submultiplicativity makes
the product of layer norms bound ``||A(x)||`` everywhere. ``certify_grid``
only samples the pointwise conditions on a finite grid and says so in its
output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ConvergenceError, DomainError, NotCertifiedError
from .netcore import FeedForwardNet
from .pwa import extract, extract_batch
from .sim import fixed_point, grid_points, variance_gain
from .spectral import NormKind, layer_norms, matrix_norm, norm_batch, vector_norm

CERTIFIED = "CertifiedContractive"
MARGINAL = "Marginal"
NOT_CERTIFIED = "NotCertified"

_SEVERITY = {CERTIFIED: 0, MARGINAL: 1, NOT_CERTIFIED: 2}


@dataclass(frozen=True)
class StabilityCertificate:
    per_layer: list  # (index, weight_norm, max_slope)
    product_bound: float
    verdict: str
    p: str

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "p": self.p,
            "per_layer": [
                {"layer": i, "weight_norm": w, "max_slope": s, "contractive": w < 1.0 - TOL.contraction_margin and s <= 1.0}
                for i, w, s in self.per_layer
            ],
            "product_bound": self.product_bound,
        }


@dataclass(frozen=True, eq=False)
class GridEvidence:
    points: np.ndarray
    mean_norms: np.ndarray
    variance_gains: np.ndarray
    domain_box: list
    resolution: list
    p: str
    threshold: float = 1.0

    @property
    def samples(self):
        return list(zip(self.points, self.mean_norms, self.variance_gains))

    @property
    def sup_mean_norm(self) -> float:
        return float(np.max(self.mean_norms))

    @property
    def sup_variance_gain(self) -> float:
        return float(np.max(self.variance_gains))

    @property
    def consistent(self) -> bool:
        return self.sup_mean_norm < 1.0 and self.sup_variance_gain < self.threshold

    def to_dict(self) -> dict:
        return {
            "kind": "sampled evidence, not a certificate",
            "p": self.p,
            "domain_box": self.domain_box,
            "resolution": self.resolution,
            "n_samples": int(len(self.points)),
            "sup_mean_norm": self.sup_mean_norm,
            "sup_variance_gain": self.sup_variance_gain,
            "variance_threshold": self.threshold,
            "consistent": self.consistent,
        }


@dataclass(frozen=True, eq=False)
class EquilibriumBounds:
    lower: float
    upper: float
    equilibrium: np.ndarray
    p: str
    iterations: int = 0

    @property
    def equilibrium_norm(self) -> float:
        return float(vector_norm(self.equilibrium, self.p))

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "equilibrium": self.equilibrium.tolist(),
                "equilibrium_norm": self.equilibrium_norm, "p": self.p, "iterations": self.iterations}


def certify_layerwise(net: FeedForwardNet, p=2, delta: float = TOL.marginal_delta) -> StabilityCertificate:
    kind = NormKind.parse(p)
    norms = layer_norms(net, kind)
    slopes = [layer.activation.max_slope for layer in net.layers]
    bound = float(np.prod([w * s for w, s in zip(norms, slopes)]))
    if all(w < 1.0 - TOL.contraction_margin for w in norms) and all(s <= 1.0 for s in slopes):
        verdict = CERTIFIED
    elif 1.0 - delta <= bound <= 1.0 + delta:
        verdict = MARGINAL
    else:
        verdict = NOT_CERTIFIED
    per_layer = [(i, w, s) for i, (w, s) in enumerate(zip(norms, slopes))]
    return StabilityCertificate(per_layer, bound, verdict, str(kind))


def combine_verdicts(*verdicts: str) -> str:
    return max(verdicts, key=_SEVERITY.__getitem__)


def certify_model(model, p=2) -> dict:
    """Layer-wise certificates for both networks of a model.

    The model verdict is the worse of the two. For a region-scaled model
    the outermost scale multiplies the mean bound.
    """
    mean_cert = certify_layerwise(model.mean_net, p)
    var_cert = certify_layerwise(model.var_net, p)
    out = {
        "verdict": combine_verdicts(mean_cert.verdict, var_cert.verdict),
        "p": mean_cert.p,
        "mean": mean_cert.to_dict(),
        "variance": var_cert.to_dict(),
    }
    if hasattr(model, "regions"):
        out["regions"] = model.regions.to_dict()
        out["outer_region_bound"] = model.regions.bands[-1][2] * mean_cert.product_bound
    return out


def certify_grid(dmm, box, resolution, p=2, threshold: float = 1.0) -> GridEvidence:
    """Sample ``||A_f(x)||`` and the variance gain on a grid, origin excluded.

    ``threshold`` is the bound for the variance gain (1 for the strict
    condition, any ``K > 0`` for the relaxed one).
    """
    kind = NormKind.parse(p)
    xs = grid_points(box, resolution)
    xs = xs[vector_norm(xs, kind) > 0]
    a, _ = extract_batch(dmm.mean_net, xs)
    mean_norms = dmm.norm_scale(xs) * norm_batch(a, kind)
    gains = variance_gain(dmm.var_net, xs, kind)
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (len(box),)).tolist()
    return GridEvidence(xs, mean_norms, gains, [list(map(float, b)) for b in box], res, str(kind), threshold)


def equilibrium_bounds(net: FeedForwardNet, p=2, tol: float = TOL.fixed_point_tol,
                       max_iter: int = TOL.fixed_point_max, x0=None) -> EquilibriumBounds:
    kind = NormKind.parse(p)
    cert = certify_layerwise(net, kind)
    if cert.verdict != CERTIFIED:
        raise NotCertifiedError(f"equilibrium bounds need a contractive certificate; verdict is {cert.verdict}")
    res = fixed_point(net, x0, tol=tol, max_iter=max_iter, p=kind)
    if not res.converged:
        raise ConvergenceError(f"fixed-point iteration did not converge in {res.iterations} steps",
                               partial=res.x, iterations=res.iterations)
    form = extract(net, res.x)
    a = matrix_norm(form.a_matrix, kind)
    b = float(vector_norm(form.b_vector, kind))
    return EquilibriumBounds(b / (1.0 + a), b / (1.0 - a), res.x, str(kind), res.iterations)


def stability_penalty(dmm, x, K: float = 1.0, p=2) -> float:
    """``max(1, ||A_f(x)||) + max(K, ||A_g(x)|| + ||b_g(x)|| / ||x||)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if float(vector_norm(x, p)) == 0.0:
        raise DomainError("the stability penalty is undefined at x = 0")
    a, _ = extract_batch(dmm.mean_net, x[None])
    mean_norm = float(dmm.norm_scale(x) * norm_batch(a, p)[0])
    gain = float(variance_gain(dmm.var_net, x[None], p)[0])
    return max(1.0, mean_norm) + max(K, gain)


def equilibrium_penalty(net: FeedForwardNet, x, x_lo: float, x_hi: float, p=2) -> float:
    form = extract(net, x)
    a = matrix_norm(form.a_matrix, p)
    if a >= 1.0:
        raise DomainError(f"||A(x)|| = {a:.6g} >= 1; the equilibrium radius is undefined")
    r = float(vector_norm(form.b_vector, p)) / (1.0 - a)
    return max(0.0, x_lo - r) + max(0.0, r - x_hi)
