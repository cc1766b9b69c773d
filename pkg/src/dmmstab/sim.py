"""Rollouts, empirical moments, fixed points and phase-grid data."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .config import TOL
from .dmm import _check, noise_block
from .errors import ShapeError
from .netcore import FeedForwardNet
from .pwa import extract_batch
from .spectral import norm_batch, vector_norm


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """States indexed ``[ic, realization, t, :]``; ``t = 0`` is the initial condition."""

    initial_conditions: np.ndarray
    realizations_per_ic: int
    horizon: int
    states: np.ndarray
    seed: int

    def trajectory_id(self, ic: int, real: int) -> int:
        return ic * self.realizations_per_ic + real


@dataclass(frozen=True, eq=False)
class MomentSeries:
    mean_t: np.ndarray  # (T+1, n)
    second_t: np.ndarray  # (T+1, n, n)

    def successive_differences(self):
        dm = np.linalg.norm(np.diff(self.mean_t, axis=0), axis=1)
        ds = np.linalg.norm(np.diff(self.second_t, axis=0), axis=(1, 2))
        return dm, ds


@dataclass(frozen=True)
class FixedPointResult:
    x: np.ndarray
    iterations: int
    converged: bool


def rollout_mean(model, x0, T: int) -> np.ndarray:
    """Mean trajectory ``x_1..x_T`` (``x0`` excluded); shape ``(T, n)``.

    ``model`` is a DMM or a bare mean network. ``x0`` may also be a batch
    ``(B, n)``, giving ``(T, B, n)``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    step = model if isinstance(model, FeedForwardNet) else model.mean
    x = np.asarray(x0, dtype=float)
    out = np.empty((T,) + x.shape)
    for t in range(T):
        x = step(x)
        out[t] = x
    return out


def rollout_ensemble(model, ics, M: int, T: int, seed: int = 0, zero_variance: bool = False) -> TrajectoryEnsemble:
    """``M`` stochastic realizations per initial condition over ``T`` steps.

    Trajectory ``(ic, r)`` has id ``ic * M + r``; its noise at step ``t``
    depends only on ``(seed, id, t)``, matching :func:`dmm.sample_step`.
    """
    if M < 1 or T < 1:
        raise ValueError("M and T must be at least 1")
    ics = np.atleast_2d(np.asarray(ics, dtype=float))
    _check(model, ics)
    n_ic, n = ics.shape
    N = n_ic * M
    states = np.empty((N, T + 1, n))
    x = np.repeat(ics, M, axis=0)
    states[:, 0] = x
    for t in range(T):
        mu = model.mean(x)
        if zero_variance:
            x = mu
        else:
            x = mu + model.std(x) * noise_block(seed, t, N, n)
        states[:, t + 1] = x
    return TrajectoryEnsemble(ics, M, T, states.reshape(n_ic, M, T + 1, n), int(seed))


def empirical_moments(ens: TrajectoryEnsemble) -> MomentSeries:
    n_ic, M, T1, n = ens.states.shape
    if n_ic * M < 2:
        raise ValueError("need at least two trajectories for moments")
    x = ens.states.reshape(n_ic * M, T1, n)
    mean = x.mean(axis=0)
    second = np.einsum("ati,atj->tij", x, x) / (n_ic * M)
    second = 0.5 * (second + second.transpose(0, 2, 1))
    return MomentSeries(mean, second)


def moment_diagnostic(moments: MomentSeries, threshold: float = TOL.mss_threshold) -> dict:
    """Successive-difference check at the final step of a moment series."""
    dm, ds = moments.successive_differences()
    last_mean, last_second = float(dm[-1]), float(ds[-1])
    return {
        "mean_step_change": last_mean,
        "second_step_change": last_second,
        "threshold": threshold,
        "converged": bool(last_mean < threshold and last_second < threshold),
        "sup_mean_norm": float(np.linalg.norm(moments.mean_t, axis=1).max()),
        "final_mean_norm": float(np.linalg.norm(moments.mean_t[-1])),
    }


def fixed_point(
    f: "FeedForwardNet | Callable",
    x0=None,
    tol: float = TOL.fixed_point_tol,
    max_iter: int = TOL.fixed_point_max,
    p=2,
) -> FixedPointResult:
    """Picard iteration ``x <- f(x)`` until ``||x_{k+1} - x_k||_p <= tol``."""
    if x0 is None:
        if not isinstance(f, FeedForwardNet):
            raise ValueError("x0 is required when f is not a network")
        x0 = np.zeros(f.n_in)
    x = np.asarray(x0, dtype=float).copy()
    for k in range(1, max_iter + 1):
        nxt = np.asarray(f(x), dtype=float)
        if nxt.shape != x.shape:
            raise ShapeError(f"map output shape {nxt.shape} differs from input {x.shape}")
        step = float(vector_norm(nxt - x, p))
        x = nxt
        if step <= tol:
            return FixedPointResult(x, k, True)
    return FixedPointResult(x, max_iter, False)


def grid_points(box, resolution) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("box must be a list of (low, high) pairs with high > low")
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (box.shape[0],))
    if np.any(res < 2):
        raise ValueError("resolution must be at least 2 per dimension")
    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(box, res)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def variance_gain(net: FeedForwardNet, xs, p=2) -> np.ndarray:
    """``||A_g(x)|| + ||b_g(x)|| / ||x||`` per row; NaN where ``x = 0``."""
    xs = np.asarray(xs, dtype=float)
    a, b = extract_batch(net, xs)
    xn = vector_norm(xs, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = norm_batch(a, p) + vector_norm(b, p) / xn
    return np.where(xn > 0, gain, np.nan)


def phase_grid(model, box, resolution) -> dict:
    """Displacement field and local norms over a 2-D grid.

    Columns ``x1, x2, dx1, dx2, norm_f, kg``. ``kg`` is NaN at the origin.
    """
    if model.dim != 2:
        raise ValueError(f"phase portraits are two-dimensional; model dimension is {model.dim}")
    xs = grid_points(box, resolution)
    disp = model.mean(xs) - xs
    a, _ = extract_batch(model.mean_net, xs)
    norm_f = model.norm_scale(xs) * norm_batch(a, 2)
    kg = variance_gain(model.var_net, xs, 2)
    return {"x1": xs[:, 0], "x2": xs[:, 1], "dx1": disp[:, 0], "dx2": disp[:, 1], "norm_f": norm_f, "kg": kg}


def time_to_ball(traj, center, eps: float) -> int | None:
    """First step index ``t >= 1`` with ``||x_t - center|| <= eps`` (traj excludes x0)."""
    d = np.linalg.norm(np.asarray(traj) - center, axis=-1)
    hit = np.nonzero(d <= eps)[0]
    return int(hit[0]) + 1 if hit.size else None


# ---------------------------------------------------------------- csv output

def _fmt(v) -> str:
    return repr(float(v))


def _write_rows(path, header, rows, meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if meta is not None:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_trajectory_csv(path, ens: TrajectoryEnsemble, max_realizations: int | None = None, meta=None):
    n_ic, M, T1, n = ens.states.shape
    keep = M if max_realizations is None else min(M, max_realizations)
    header = ["t", "ic", "real"] + [f"x{i + 1}" for i in range(n)]
    rows = (
        [t, ic, r] + [_fmt(v) for v in ens.states[ic, r, t]]
        for ic in range(n_ic) for r in range(keep) for t in range(T1)
    )
    _write_rows(path, header, rows, meta)


def write_moment_csv(path, moments: MomentSeries, meta=None):
    T1, n = moments.mean_t.shape
    header = ["t"] + [f"mean_{i + 1}" for i in range(n)] + [
        f"second_{i + 1}{j + 1}" for i in range(n) for j in range(n)
    ]
    rows = (
        [t] + [_fmt(v) for v in moments.mean_t[t]] + [_fmt(v) for v in moments.second_t[t].reshape(-1)]
        for t in range(T1)
    )
    _write_rows(path, header, rows, meta)


def write_phase_csv(path, grid: dict, meta=None):
    cols = ["x1", "x2", "dx1", "dx2", "norm_f", "kg"]
    rows = ([_fmt(grid[c][i]) for c in cols] for i in range(len(grid["x1"])))
    _write_rows(path, cols, rows, meta)
