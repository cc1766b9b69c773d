"""Stability analysis and construction of deep Markov models with feed-forward transitions."""
from .certify import (
    CERTIFIED,
    MARGINAL,
    NOT_CERTIFIED,
    EquilibriumBounds,
    GridEvidence,
    StabilityCertificate,
    certify_grid,
    certify_layerwise,
    certify_model,
    equilibrium_bounds,
    equilibrium_penalty,
    stability_penalty,
)
from .config import TOL, Tolerances
from .dmm import DeepMarkovModel, ParametricDmm, RegionSpec, StreamKey, load_model, sample_step
from .errors import ConvergenceError, DomainError, NotCertifiedError, ShapeError
from .factorize import (
    BandReport,
    FactorizedWeight,
    GershgorinDisc,
    SpectralBand,
    gd_weight,
    pf_weight,
    random_weight,
    svd_weight,
    verify_band,
)
from .netcore import Activation, FeedForwardNet, Layer, eval_net
from .pwa import ActivationPattern, PwaForm, extract, extract_batch, reconstruct
from .sim import MomentSeries, TrajectoryEnsemble, empirical_moments, fixed_point, rollout_ensemble, rollout_mean
from .spectral import NormKind, eigenvalues, local_lipschitz, matrix_norm, op_norm, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "CERTIFIED",
    "MARGINAL",
    "NOT_CERTIFIED",
    "EquilibriumBounds",
    "GridEvidence",
    "StabilityCertificate",
    "certify_grid",
    "certify_layerwise",
    "certify_model",
    "equilibrium_bounds",
    "equilibrium_penalty",
    "stability_penalty",
    "TOL",
    "Tolerances",
    "DeepMarkovModel",
    "ParametricDmm",
    "RegionSpec",
    "StreamKey",
    "load_model",
    "sample_step",
    "ConvergenceError",
    "DomainError",
    "NotCertifiedError",
    "ShapeError",
    "BandReport",
    "FactorizedWeight",
    "GershgorinDisc",
    "SpectralBand",
    "gd_weight",
    "pf_weight",
    "random_weight",
    "svd_weight",
    "verify_band",
    "Activation",
    "FeedForwardNet",
    "Layer",
    "eval_net",
    "ActivationPattern",
    "PwaForm",
    "extract",
    "extract_batch",
    "reconstruct",
    "MomentSeries",
    "TrajectoryEnsemble",
    "empirical_moments",
    "fixed_point",
    "rollout_ensemble",
    "rollout_mean",
    "NormKind",
    "eigenvalues",
    "local_lipschitz",
    "matrix_norm",
    "op_norm",
    "spectral_radius",
]
