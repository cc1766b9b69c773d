"""Weight matrices with prescribed spectral bands.

Three constructions:

* Perron-Frobenius (``pf_weight``): nonnegative square matrix whose
  dominant eigenvalue sits in ``[lambda_min, lambda_max]``.
* SVD (``svd_weight``): ``U @ Sigma @ V`` with Householder-built
  orthogonal factors and clamped singular values; any shape.
* Gershgorin discs (``gd_weight``): every eigenvalue inside a disc of
  given center and radius.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit, softmax

from .config import TOL
from .errors import ShapeError
from .spectral import eigenvalues, matrix_norm, singular_values


@dataclass(frozen=True)
class SpectralBand:
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not 0.0 <= self.lambda_min < self.lambda_max:
            raise ValueError(f"need 0 <= lambda_min < lambda_max, got [{self.lambda_min}, {self.lambda_max}]")

    @classmethod
    def stable(cls, upper: float = 0.9) -> "SpectralBand":
        return cls(0.0, upper)

    @classmethod
    def marginal(cls) -> "SpectralBand":
        return cls(0.99, 1.0)

    @classmethod
    def unstable(cls) -> "SpectralBand":
        return cls(1.1, 1.5)

    @property
    def target(self) -> str:
        if self.lambda_max < 1.0:
            return "stable"
        if self.lambda_min > 1.0:
            return "unstable"
        return "marginal"

    def squash(self, raw) -> np.ndarray:
        """Map reals into the open band via the logistic function."""
        return self.lambda_max - (self.lambda_max - self.lambda_min) * expit(np.asarray(raw, dtype=float))

    def to_list(self) -> list[float]:
        return [self.lambda_min, self.lambda_max]


@dataclass(frozen=True)
class GershgorinDisc:
    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @classmethod
    def from_band(cls, band: SpectralBand) -> "GershgorinDisc":
        return cls(0.5 * (band.lambda_min + band.lambda_max), 0.5 * (band.lambda_max - band.lambda_min))


@dataclass(frozen=True, eq=False)
class FactorizedWeight:
    realized: np.ndarray
    method: str  # "pf" | "svd" | "gd"
    band: "SpectralBand | GershgorinDisc"
    parameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BandReport:
    method: str
    measured: list
    passed: bool
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return {"method": self.method, "measured": self.measured, "passed": self.passed,
                "band": [self.lower, self.upper]}


def pf_weight(m_raw, a_raw, band: SpectralBand) -> FactorizedWeight:
    m_raw = np.asarray(m_raw, dtype=float)
    a_raw = np.asarray(a_raw, dtype=float)
    if m_raw.ndim != 2 or m_raw.shape[0] != m_raw.shape[1]:
        raise ShapeError(f"PF weights are square; got m_raw shape {m_raw.shape}")
    if a_raw.shape != m_raw.shape:
        raise ShapeError(f"a_raw shape {a_raw.shape} does not match m_raw shape {m_raw.shape}")
    damping = band.squash(m_raw)
    # rows of the softmax sum to one, so row sums of A lie inside the band
    a = softmax(a_raw, axis=1) * damping
    return FactorizedWeight(a, "pf", band, {"m_raw": m_raw, "a_raw": a_raw})


def householder(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    vv = float(v @ v)
    if vv == 0.0:
        raise ValueError("Householder reflector undefined for a zero vector")
    return np.eye(v.size) - (2.0 / vv) * np.outer(v, v)


def householder_product(vectors: Sequence, n: int) -> np.ndarray:
    q = np.eye(n)
    for v in vectors:
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != n:
            raise ShapeError(f"reflector vector length {v.size} does not match dimension {n}")
        q = q @ householder(v)
    return q


def svd_weight(u_vectors, v_vectors, sv_raw, band: SpectralBand, shape) -> FactorizedWeight:
    rows, cols = shape
    if len(u_vectors) < 1 or len(v_vectors) < 1:
        raise ValueError("need at least one reflector vector for each orthogonal factor")
    sv_raw = np.asarray(sv_raw, dtype=float).reshape(-1)
    if sv_raw.size != min(rows, cols):
        raise ShapeError(f"sv_raw needs {min(rows, cols)} entries, got {sv_raw.size}")
    u = householder_product(u_vectors, rows)
    v = householder_product(v_vectors, cols)
    sigma = band.squash(sv_raw)
    s_rect = np.zeros((rows, cols))
    s_rect[np.arange(sigma.size), np.arange(sigma.size)] = sigma
    a = u @ s_rect @ v
    return FactorizedWeight(a, "svd", band, {"u": u, "v": v, "sigma": sigma, "sv_raw": sv_raw})


def orthogonality_penalty(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    for name, m in (("u", u), ("v", v)):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"{name} must be square, got shape {m.shape}")
    iu, iv = np.eye(u.shape[0]), np.eye(v.shape[0])
    return (matrix_norm(iu - u @ u.T, 2) + matrix_norm(iu - u.T @ u, 2)
            + matrix_norm(iv - v @ v.T, 2) + matrix_norm(iv - v.T @ v, 2))


def gd_weight(m_raw, radius: float, center: float) -> FactorizedWeight:
    """Row-normalise off-diagonal mass to ``radius`` and shift by ``center``."""
    m = np.array(m_raw, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"GD weights are square; got shape {m.shape}")
    disc = GershgorinDisc(float(center), float(radius))
    np.fill_diagonal(m, 0.0)
    if np.any(m < 0):
        warnings.warn("negative entries in m_raw clamped to zero", RuntimeWarning, stacklevel=2)
        m = np.maximum(m, 0.0)
    s = m.sum(axis=1)
    if np.any(s == 0):
        raise ValueError(f"row(s) {np.nonzero(s == 0)[0].tolist()} have no off-diagonal mass")
    a = (radius / s)[:, None] * m + center * np.eye(m.shape[0])
    return FactorizedWeight(a, "gd", disc, {"m_raw": m, "row_sums": s})


def verify_band(a, band, method: str, slack: float = TOL.band_slack) -> BandReport:
    """Measure ``a`` against ``band`` with the rule that matches ``method``.

    pf: dominant eigenvalue modulus; svd: every singular value; gd: every
    eigenvalue must sit in the disc (a ``SpectralBand`` is read as the
    disc spanning it).
    """
    a = np.asarray(a, dtype=float)
    method = method.lower()
    if method == "gd":
        disc = band if isinstance(band, GershgorinDisc) else GershgorinDisc.from_band(band)
        ev = eigenvalues(a)
        dist = np.abs(ev - disc.center)
        measured = [[float(z.real), float(z.imag)] for z in ev]
        return BandReport("gd", measured, bool(np.all(dist <= disc.radius + slack)),
                          disc.center - disc.radius, disc.center + disc.radius)
    if isinstance(band, GershgorinDisc):
        band = SpectralBand(max(0.0, band.center - band.radius), band.center + band.radius)
    lo, hi = band.lambda_min - slack, band.lambda_max + slack
    if method == "pf":
        dom = float(np.abs(eigenvalues(a)[0]))
        return BandReport("pf", [dom], lo <= dom <= hi, band.lambda_min, band.lambda_max)
    if method == "svd":
        sv = singular_values(a)
        return BandReport("svd", sv.tolist(), bool(np.all((sv >= lo) & (sv <= hi))),
                          band.lambda_min, band.lambda_max)
    raise ValueError(f"unknown method {method!r}")


def random_weight(method: str, shape, band: SpectralBand, rng: np.random.Generator) -> FactorizedWeight:
    """Draw raw parameters from ``rng`` and build a weight in ``band``.

    PF and GD need ``shape`` square. GD spans the band with its disc.
    """
    rows, cols = shape
    method = method.lower()
    if method in ("pf", "gd") and rows != cols:
        raise ShapeError(f"{method.upper()} weights are square; requested {rows}x{cols}")
    if method == "pf":
        return pf_weight(rng.standard_normal((rows, cols)), rng.standard_normal((rows, cols)), band)
    if method == "svd":
        us = [rng.standard_normal(rows) for _ in range(rows)]
        vs = [rng.standard_normal(cols) for _ in range(cols)]
        return svd_weight(us, vs, rng.standard_normal(min(rows, cols)), band, shape)
    if method == "gd":
        disc = GershgorinDisc.from_band(band)
        if rows == 1:
            # no off-diagonal entries exist; the disc collapses to its center
            return FactorizedWeight(np.array([[disc.center]]), "gd", disc, {})
        return gd_weight(rng.uniform(0.0, 1.0, (rows, cols)), disc.radius, disc.center)
    raise ValueError(f"unknown method {method!r}")
