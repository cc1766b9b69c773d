"""Model generators and the figure-reproduction recipes used by the CLI."""
from __future__ import annotations

import math

import numpy as np

from .certify import CERTIFIED, certify_layerwise, equilibrium_bounds
from .dmm import DeepMarkovModel, ParametricDmm, RegionSpec, effective_norm_batch
from .factorize import SpectralBand, random_weight, svd_weight, verify_band
from .netcore import FeedForwardNet, Layer, Activation, IDENTITY
from .sim import (
    empirical_moments,
    grid_points,
    moment_diagnostic,
    rollout_ensemble,
    rollout_mean,
    time_to_ball,
)
from .spectral import layer_product_bound


def random_net(method, band, depth, activation, dim, rng, hidden=None, bias=False,
               bias_scale=0.5, output_offset=0.0):
    """Network of ``depth`` factorized layers mapping ``R^dim -> R^dim``.

    Returns ``(net, reports)`` where ``reports`` holds one band check per
    layer. ``output_offset`` is added to the final bias.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    hidden = dim if hidden is None else hidden
    widths = [dim] + [hidden] * (depth - 1) + [dim]
    act = Activation.parse(activation)
    layers, reports = [], []
    for i in range(depth):
        fw = random_weight(method, (widths[i + 1], widths[i]), band, rng)
        reports.append(verify_band(fw.realized, fw.band, fw.method))
        b = rng.uniform(-bias_scale, bias_scale, widths[i + 1]) if bias else None
        if i == depth - 1 and output_offset:
            b = (np.zeros(dim) if b is None else b) + output_offset
        layers.append(Layer(fw.realized, b, act if i < depth - 1 else IDENTITY))
    return FeedForwardNet(tuple(layers)), reports


def isometric_svd_net(depth, activation, dim, rng, sigma_floor_band=SpectralBand(0.99, 1.0), bias=False):
    """SVD layers with every singular value saturated at the band floor."""
    layers = []
    act = Activation.parse(activation)
    for i in range(depth):
        us = [rng.standard_normal(dim) for _ in range(dim)]
        vs = [rng.standard_normal(dim) for _ in range(dim)]
        fw = svd_weight(us, vs, np.full(dim, 50.0), sigma_floor_band, (dim, dim))
        b = rng.uniform(-0.5, 0.5, dim) if bias else None
        layers.append(Layer(fw.realized, b, act if i < depth - 1 else IDENTITY))
    return FeedForwardNet(tuple(layers))


def unit_arc(k=10, radius=1.0):
    """``k`` points on the first-quadrant arc of the given radius."""
    th = np.linspace(0.0, 0.5 * math.pi, k)
    return radius * np.stack([np.cos(th), np.sin(th)], axis=1)


def circle(k=10, radius=5.0):
    th = 2.0 * math.pi * np.arange(k) / k
    return radius * np.stack([np.cos(th), np.sin(th)], axis=1)


# ------------------------------------------------------------------ figure 1

REGIME_BANDS = {
    "stable": SpectralBand(0.0, 0.9),
    "marginal": SpectralBand(0.99, 1.0),
    "unstable": SpectralBand(1.1, 1.3),
}
VARIANCE_OFFSET = -6.0


def fig1_model(mean_regime, var_regime, seed=0, method="pf", activation="relu", depth=2):
    keys = list(REGIME_BANDS)
    rng = np.random.default_rng([seed, keys.index(mean_regime), keys.index(var_regime)])
    f, rf = random_net(method, REGIME_BANDS[mean_regime], depth, activation, 2, rng)
    g, rg = random_net(method, REGIME_BANDS[var_regime], depth, "relu", 2, rng, output_offset=VARIANCE_OFFSET)
    return DeepMarkovModel(f, g), rf + rg


def fig1(seed=0, T=500, M=200, n_ic=10, divergence_T=200):
    """3x3 grid of mean/variance norm regimes with PF weights and ReLU."""
    ics = unit_arc(n_ic, 1.0)
    x0_norm = 1.0
    panels, summary = {}, {"seed": seed, "T": T, "M": M, "n_ic": n_ic, "panels": {}}
    for mk in REGIME_BANDS:
        for vk in REGIME_BANDS:
            model, reports = fig1_model(mk, vk, seed)
            ens = rollout_ensemble(model, ics, M, T, seed=seed)
            with np.errstate(over="ignore", invalid="ignore"):
                mom = empirical_moments(ens)
                diag = moment_diagnostic(mom)
                norms = np.linalg.norm(mom.mean_t, axis=1)
            name = f"mean_{mk}__var_{vk}"
            info = {
                "bands_verified": all(r.passed for r in reports),
                "diagnostic": diag,
                "mean_norm_at_divergence_T": float(norms[min(divergence_T, T)]),
                "sup_mean_norm": float(np.nanmax(norms)),
            }
            if mk == "stable" and vk == "stable":
                info["check"] = "converged"
                info["passed"] = diag["converged"]
            elif mk == "unstable":
                info["check"] = f"|mean_{divergence_T}| > 1e3"
                info["passed"] = bool(np.nan_to_num(norms[min(divergence_T, T)], nan=np.inf) > 1e3)
            elif mk == "marginal" and vk == "stable":
                info["check"] = f"sup_t |mean_t| <= {10 * x0_norm}"
                info["passed"] = bool(np.nanmax(norms) <= 10 * x0_norm)
            panels[name] = {"model": model, "ensemble": ens, "moments": mom}
            summary["panels"][name] = info
    summary["passed"] = all(p.get("passed", True) for p in summary["panels"].values())
    return panels, summary


# ------------------------------------------------------------------ figure 2

DEPTHS = (1, 2, 4, 8)


def fig2_bias_models(seed=0, depth=2):
    """Certified SVD/Tanh mean networks that differ only in their biases."""
    rng = np.random.default_rng([seed, 101])
    f, _ = random_net("svd", SpectralBand(0.0, 0.9), depth, "tanh", 2, rng)
    biases = [rng.uniform(-1.0, 1.0, l.n_out) for l in f.layers]
    fb = FeedForwardNet(tuple(Layer(l.weight, b, l.activation) for l, b in zip(f.layers, biases)))
    g, _ = random_net("svd", SpectralBand(0.0, 0.9), 2, "relu", 2, rng, output_offset=-3.0)
    return DeepMarkovModel(f, g), DeepMarkovModel(fb, g)


def fig2_depth_model(depth, seed=0):
    rng = np.random.default_rng([seed, depth])
    f = isometric_svd_net(depth, "relu", 2, rng)
    g, _ = random_net("svd", SpectralBand(0.0, 0.9), 2, "relu", 2, rng, output_offset=-3.0)
    return DeepMarkovModel(f, g)


def fig2(seed=0, T=300, M=20, n_ic=10, radius=5.0):
    ics = circle(n_ic, radius)
    panels, summary = {}, {"seed": seed, "bias": {}, "depth": {}}
    no_bias, with_bias = fig2_bias_models(seed)
    for name, model in (("no_bias", no_bias), ("bias", with_bias)):
        cert = certify_layerwise(model.mean_net, 2)
        eq = equilibrium_bounds(model.mean_net, 2)
        summary["bias"][name] = {
            "verdict": cert.verdict,
            "product_bound": cert.product_bound,
            "equilibrium": eq.equilibrium.tolist(),
            "equilibrium_norm": eq.equilibrium_norm,
            "lower": eq.lower,
            "upper": eq.upper,
        }
        panels[f"bias_{name}"] = {"model": model, "ensemble": rollout_ensemble(model, ics, M, T, seed=seed)}
    b = summary["bias"]
    summary["bias"]["passed"] = bool(
        b["no_bias"]["verdict"] == b["bias"]["verdict"] == CERTIFIED and b["bias"]["equilibrium_norm"] > 0.01
    )
    times = []
    for depth in DEPTHS:
        model = fig2_depth_model(depth, seed)
        traj = rollout_mean(model, ics, T)
        hits = [time_to_ball(traj[:, i], 0.0, 0.1 * radius) for i in range(n_ic)]
        t_eps = float(np.mean([T + 1 if h is None else h for h in hits]))
        times.append(t_eps)
        summary["depth"][str(depth)] = {
            "product_bound": layer_product_bound(model.mean_net, 2),
            "expected": 0.99 ** depth,
            "mean_time_to_eps": t_eps,
        }
        panels[f"depth_{depth}"] = {"model": model, "ensemble": rollout_ensemble(model, ics, M, T, seed=seed)}
    summary["depth"]["non_increasing"] = bool(all(a >= b for a, b in zip(times, times[1:])))
    summary["passed"] = bool(summary["bias"]["passed"] and summary["depth"]["non_increasing"])
    return panels, summary


# ------------------------------------------------------------------ figure 3

def fig3_model(seed=0, activation="identity", scales=(1.05, 1.0, 0.5), radii=(20.0, 40.0)):
    """Three-region model over a near-isometric SVD mean network.

    Layers keep every singular value at 0.995 and are rotations, so the
    base linear part has norm ~0.99 everywhere and the region scales set
    the effective norm directly.
    """
    rng = np.random.default_rng([seed, 303])
    f = isometric_svd_net(2, activation, 2, rng, sigma_floor_band=SpectralBand(0.995, 1.0))
    g, _ = random_net("svd", SpectralBand(0.0, 0.05), 2, "relu", 2, rng)
    base = DeepMarkovModel(f, g)
    return ParametricDmm(base, RegionSpec.three_region(radii[0], radii[1], scales))


def band_norm_stats(model, radii=(20.0, 40.0), extent=60.0, resolution=121):
    xs = grid_points([(-extent, extent)] * 2, resolution)
    r = np.linalg.norm(xs, axis=1)
    xs, r = xs[r > 0], r[r > 0]
    en = effective_norm_batch(model, xs)
    edges = [0.0, radii[0], radii[1], math.inf]
    out = []
    for lo, hi in zip(edges, edges[1:]):
        # stay clear of the blend zones
        w = model.regions.blend_width
        sel = (r >= lo + w) & (r < hi - w) if lo > 0 else (r < hi - w)
        out.append({"r_low": lo, "r_high": None if hi == math.inf else hi,
                    "min": float(en[sel].min()), "mean": float(en[sel].mean()), "max": float(en[sel].max())})
    return out


def fig3(seed=0, T=10_000, n_ic=10, M=10, bound=60.0, eps=1.0, extra_activations=("softplus", "selu")):
    panels, summary = {}, {"seed": seed, "T": T, "rollouts": n_ic * M, "panels": {}}
    for act in ("identity",) + tuple(extra_activations):
        model = fig3_model(seed, act)
        ens = rollout_ensemble(model, circle(n_ic, 5.0), M, T, seed=seed)
        r = np.linalg.norm(ens.states, axis=-1).reshape(n_ic * M, T + 1)
        info = {
            "activation": act,
            "max_radius": float(r.max()),
            "contained": bool(r.max() <= bound),
            "exit_fraction": float((r.max(axis=1) > eps).mean()),
            "band_effective_norms": band_norm_stats(model),
        }
        info["passed"] = info["contained"] and info["exit_fraction"] >= 0.9
        panels[f"three_region_{act}"] = {"model": model, "ensemble": ens}
        summary["panels"][f"three_region_{act}"] = info
    summary["passed"] = summary["panels"]["three_region_identity"]["passed"]
    return panels, summary
