"""Shared numerical tolerances.

Every module reads its defaults from :data:`TOL`; nothing else hard-codes
a threshold.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # preactivations closer to zero than this use the analytic slope
    lambda_eps: float = 1e-7
    power_iter_tol: float = 1e-10
    power_iter_max: int = 5000
    eig_iter_factor: int = 100
    eig_max_dim: int = 64
    band_slack: float = 1e-6
    contraction_margin: float = 1e-12
    marginal_delta: float = 0.02
    fixed_point_tol: float = 1e-10
    fixed_point_max: int = 100_000
    mss_threshold: float = 1e-3
    blend_width: float = 2.0


TOL = Tolerances()
