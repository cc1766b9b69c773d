"""Induced operator norms, eigenvalues and Lipschitz-type bounds."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ConvergenceError, DomainError, ShapeError
from .netcore import FeedForwardNet
from .pwa import PwaForm


class NormKind(enum.Enum):
    ONE = 1
    TWO = 2
    INF = "inf"

    @classmethod
    def parse(cls, p) -> "NormKind":
        if isinstance(p, NormKind):
            return p
        if isinstance(p, str):
            key = p.strip().lower()
            table = {"1": cls.ONE, "2": cls.TWO, "inf": cls.INF, "infinity": cls.INF}
            if key in table:
                return table[key]
        elif p == 1:
            return cls.ONE
        elif p == 2:
            return cls.TWO
        elif p == np.inf:
            return cls.INF
        raise ValueError(f"unsupported norm {p!r}; only 1, 2 and inf are admitted")

    @property
    def order(self) -> float:
        return {NormKind.ONE: 1.0, NormKind.TWO: 2.0, NormKind.INF: np.inf}[self]

    def __str__(self) -> str:
        return {NormKind.ONE: "1", NormKind.TWO: "2", NormKind.INF: "inf"}[self]


@dataclass(frozen=True)
class SpectralReport:
    norm_value: float
    method: str  # "column_sum" | "row_sum" | "power_iteration"
    iterations: int = 0
    residual: float = 0.0

    @property
    def converged(self) -> bool:
        return self.method != "power_iteration" or self.residual <= TOL.power_iter_tol


def vector_norm(x, p=2) -> np.ndarray:
    """p-norm along the last axis."""
    return np.linalg.norm(np.asarray(x, dtype=float), ord=NormKind.parse(p).order, axis=-1)


def _alt_start(n: int) -> np.ndarray:
    v = np.cos(2.399963229728653 * np.arange(1, n + 1)) + 0.25
    return v / np.linalg.norm(v)


def _power_run(gram: np.ndarray, start: np.ndarray, tol: float, max_iter: int):
    B, n, _ = gram.shape
    v = np.broadcast_to(start, (B, n)).copy()
    est = np.zeros(B)
    change = np.full(B, np.inf)
    iters = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)
    for k in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        w = np.einsum("bij,bj->bi", gram[idx], v[idx])
        new = np.sqrt(np.maximum(np.einsum("bi,bi->b", v[idx], w), 0.0))
        wn = np.linalg.norm(w, axis=1)
        dead = wn == 0.0
        wn[dead] = 1.0
        v[idx] = np.where(dead[:, None], v[idx], w / wn[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(new > 0, np.abs(new - est[idx]) / new, 0.0)
        est[idx] = new
        change[idx] = rel
        iters[idx] = k
        done = (rel <= tol) | dead
        active[idx[done]] = False
    return est, iters, change


def sigma_max_batch(stack, tol: float = TOL.power_iter_tol, max_iter: int = TOL.power_iter_max):
    """Largest singular value of every matrix in ``(B, m, n)`` by power iteration.

    Iterates on the smaller Gram matrix starting from the normalised ones
    vector. A second deterministic start guards against a ones vector that
    is orthogonal to the dominant singular direction; the larger estimate
    wins. Returns ``(values, iterations, residuals)``.
    """
    a = np.asarray(stack, dtype=np.float64)
    if a.ndim != 3 or a.shape[1] == 0 or a.shape[2] == 0:
        raise ShapeError("expected a nonempty stack of matrices")
    gram = a.transpose(0, 2, 1) @ a if a.shape[2] <= a.shape[1] else a @ a.transpose(0, 2, 1)
    n = gram.shape[1]
    ones = np.ones(n) / np.sqrt(n)
    e1, i1, r1 = _power_run(gram, ones, tol, max_iter)
    e2, i2, r2 = _power_run(gram, _alt_start(n), tol, max_iter)
    pick = e2 > e1
    return np.where(pick, e2, e1), i1 + i2, np.where(pick, r2, r1)


def op_norm(a, p=2) -> SpectralReport:
    """Induced operator norm for p in {1, 2, inf}."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"op_norm needs a nonempty matrix, got shape {a.shape}")
    kind = NormKind.parse(p)
    if kind is NormKind.ONE:
        return SpectralReport(float(np.abs(a).sum(axis=0).max()), "column_sum")
    if kind is NormKind.INF:
        return SpectralReport(float(np.abs(a).sum(axis=1).max()), "row_sum")
    val, it, res = sigma_max_batch(a[None])
    return SpectralReport(float(val[0]), "power_iteration", int(it[0]), float(res[0]))


def norm_batch(stack, p=2) -> np.ndarray:
    a = np.asarray(stack, dtype=np.float64)
    kind = NormKind.parse(p)
    if kind is NormKind.ONE:
        return np.abs(a).sum(axis=1).max(axis=1)
    if kind is NormKind.INF:
        return np.abs(a).sum(axis=2).max(axis=1)
    return sigma_max_batch(a)[0]


def matrix_norm(a, p=2) -> float:
    return op_norm(a, p).norm_value


def eigenvalues(a, vectors: bool = False):
    """All eigenvalues sorted by descending modulus.

    LAPACK's Hessenberg reduction with shifted QR does the work. With
    ``vectors=True`` returns ``(values, vectors)`` with eigenvectors in
    the columns.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.size == 0:
        raise ShapeError(f"eigenvalues needs a nonempty square matrix, got shape {a.shape}")
    if a.shape[0] > TOL.eig_max_dim:
        raise ShapeError(f"dimension {a.shape[0]} exceeds the supported maximum {TOL.eig_max_dim}")
    try:
        if vectors:
            w, v = np.linalg.eig(a)
        else:
            w = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration did not converge: {exc}") from exc
    order = np.lexsort((-w.imag, -w.real, -np.abs(w)))
    w = w[order].astype(complex)
    if vectors:
        return w, v[:, order]
    return w


def spectral_radius(a) -> float:
    return float(np.abs(eigenvalues(a)[0]))


def singular_values(a) -> np.ndarray:
    """Singular values in descending order from the eigenvalues of the Gram matrix."""
    a = np.asarray(a, dtype=np.float64)
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    ev = np.linalg.eigvalsh(gram)[::-1]
    return np.sqrt(np.clip(ev, 0.0, None))


def local_lipschitz(form: PwaForm, x, p=2) -> float:
    """Gain bound ``||A(x)|| + ||b(x)|| / ||x||`` of a PWA form."""
    xn = float(vector_norm(x, p))
    if xn == 0.0:
        raise DomainError("local Lipschitz gain is undefined at x = 0")
    return matrix_norm(form.a_matrix, p) + float(vector_norm(form.b_vector, p)) / xn


def layer_norms(net: FeedForwardNet, p=2) -> list[float]:
    return [matrix_norm(layer.weight, p) for layer in net.layers]


def layer_product_bound(net: FeedForwardNet, p=2) -> float:
    """Product of weight norms and activation slopes over all layers."""
    bound = 1.0
    for layer, w in zip(net.layers, layer_norms(net, p)):
        bound *= w * layer.activation.max_slope
    return bound
