"""Robust SE(2) fitting of matched object centers.

The residual correction is found by iteratively reweighted least squares on
a Welsch loss, annealing the kernel scale from coarse to fine (graduated
non-convexity). Each reweighting step is solved in closed form by weighted
2-D Procrustes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .context import DetectionSet
from .geometry import RigidTransform2, compose

KERNELS = ("welsch",)


class DegenerateConfigurationError(ValueError):
    """Too few (or coincident) weighted points to pin down a rigid transform."""


@dataclass(frozen=True)
class RobustFitParams:
    kernel: str = "welsch"
    scale_schedule: tuple[float, ...] = (5.0, 2.0, 0.5, 0.1)
    max_iters_per_scale: int = 20
    convergence_tol: float = 1e-6
    # Each stage uses max(scale, floor_factor * robust residual std); 0 disables.
    scale_floor_factor: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "scale_schedule", tuple(float(s) for s in self.scale_schedule))
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown robust kernel {self.kernel!r}")
        s = self.scale_schedule
        if not s or any(x <= 0 for x in s) or any(b >= a for a, b in zip(s, s[1:])):
            raise ValueError("scale_schedule must be positive and strictly decreasing")
        if self.max_iters_per_scale < 1 or self.convergence_tol <= 0:
            raise ValueError("max_iters_per_scale must be >= 1 and convergence_tol > 0")
        if self.scale_floor_factor < 0:
            raise ValueError("scale_floor_factor must be >= 0")


@dataclass(frozen=True)
class CalibrationResult:
    refined: RigidTransform2
    residual_correction: RigidTransform2
    inlier_weights: tuple[float, ...] = ()
    fallback: bool = False


def weighted_procrustes_se2(ego_pts, coop_pts, weights=None) -> RigidTransform2:
    """Closed-form ``argmin sum w_i ||ego_i - (R coop_i + t)||^2``."""
    e = np.asarray(ego_pts, dtype=float).reshape(-1, 2)
    c = np.asarray(coop_pts, dtype=float).reshape(-1, 2)
    if e.shape != c.shape:
        raise ValueError("point lists differ in length")
    w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if len(w) != len(e):
        raise ValueError("weights and points differ in length")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    pos = w > 0
    if np.count_nonzero(pos) < 2:
        raise DegenerateConfigurationError("need at least 2 points with positive weight")
    wsum = w.sum()
    ce = (w[:, None] * e).sum(axis=0) / wsum
    cc = (w[:, None] * c).sum(axis=0) / wsum
    a = c - cc
    b = e - ce
    if not np.any(np.abs(a[pos]) > 0.0):
        raise DegenerateConfigurationError("all weighted coop points coincide")
    cross = float(np.sum(w * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])))
    dot = float(np.sum(w * (a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1])))
    theta = math.atan2(cross, dot)
    ct, st = math.cos(theta), math.sin(theta)
    tx = ce[0] - (ct * cc[0] - st * cc[1])
    ty = ce[1] - (st * cc[0] + ct * cc[1])
    return RigidTransform2(theta, float(tx), float(ty))


def welsch_weights(r: np.ndarray, scale: float) -> np.ndarray:
    return np.exp(-((r / scale) ** 2))


def welsch_loss(r: np.ndarray, scale: float) -> float:
    return float(np.sum(scale**2 * (1.0 - np.exp(-((r / scale) ** 2)))))


def _residuals(t: RigidTransform2, ego: np.ndarray, coop: np.ndarray) -> np.ndarray:
    return np.linalg.norm(ego - t.apply(coop), axis=1)


# Median of a 2-D isotropic Gaussian residual norm, in units of the per-axis std.
_RAYLEIGH_MEDIAN = math.sqrt(2.0 * math.log(2.0))


def robust_fit_points(
    ego_pts,
    coop_pts,
    params: Optional[RobustFitParams] = None,
    init: Optional[RigidTransform2] = None,
    trace: Optional[Callable[[float, int, float], None]] = None,
) -> tuple[RigidTransform2, np.ndarray]:
    """Annealed Welsch IRLS on explicit point pairs.

    ``trace(scale, iteration, objective)`` is called before the first and after
    every reweighting step of each stage, with the objective evaluated at that
    stage's (fixed) scale.
    """
    params = params or RobustFitParams()
    e = np.asarray(ego_pts, dtype=float).reshape(-1, 2)
    c = np.asarray(coop_pts, dtype=float).reshape(-1, 2)
    if len(e) < 2:
        raise DegenerateConfigurationError("need at least 2 pairs")
    if not np.any(c != c[0]):
        raise DegenerateConfigurationError("all coop points coincide")
    t = init or RigidTransform2.identity()
    scale = params.scale_schedule[-1]
    for nominal in params.scale_schedule:
        r = _residuals(t, e, c)
        scale = nominal
        if params.scale_floor_factor > 0:
            sigma_hat = float(np.median(r)) / _RAYLEIGH_MEDIAN
            scale = max(nominal, params.scale_floor_factor * sigma_hat)
        if trace is not None:
            trace(scale, 0, welsch_loss(r, scale))
        for it in range(1, params.max_iters_per_scale + 1):
            # Shifting r^2 rescales all weights by one constant: same solution, no underflow.
            w = np.exp(-(r**2 - np.min(r**2)) / scale**2)
            try:
                t_new = weighted_procrustes_se2(e, c, w)
            except DegenerateConfigurationError:
                break
            moved = float(np.max(np.linalg.norm(t_new.apply(c) - t.apply(c), axis=1)))
            t = t_new
            r = _residuals(t, e, c)
            if trace is not None:
                trace(scale, it, welsch_loss(r, scale))
            if moved < params.convergence_tol:
                break
    weights = welsch_weights(_residuals(t, e, c), scale)
    return t, weights


def robust_fit_se2(
    pairs: Sequence[tuple[int, int]],
    ego: DetectionSet,
    coop_in_ego: DetectionSet,
    params: Optional[RobustFitParams] = None,
) -> tuple[RigidTransform2, np.ndarray]:
    """Residual correction mapping ego-frame coop positions onto ego positions."""
    pairs = list(pairs)
    if len(pairs) < 2:
        raise DegenerateConfigurationError("need at least 2 matched pairs")
    ep = ego.positions()
    cp = coop_in_ego.positions()
    ia = [p[0] for p in pairs]
    ib = [p[1] for p in pairs]
    return robust_fit_points(ep[ia], cp[ib], params)


def calibrated_transform(correction: RigidTransform2, t_tilde: RigidTransform2) -> RigidTransform2:
    return compose(correction, t_tilde)


def calibrate(
    pairs: Sequence[tuple[int, int]],
    ego: DetectionSet,
    coop_in_ego: DetectionSet,
    t_tilde: RigidTransform2,
    params: Optional[RobustFitParams] = None,
) -> CalibrationResult:
    """Fit the correction and compose it onto ``t_tilde``; fall back to ``t_tilde`` when degenerate."""
    try:
        corr, w = robust_fit_se2(pairs, ego, coop_in_ego, params)
    except DegenerateConfigurationError:
        return CalibrationResult(t_tilde, RigidTransform2.identity(), (), True)
    return CalibrationResult(calibrated_transform(corr, t_tilde), corr, tuple(float(x) for x in w), False)


__all__ = [
    "CalibrationResult",
    "DegenerateConfigurationError",
    "RobustFitParams",
    "calibrate",
    "calibrated_transform",
    "robust_fit_points",
    "robust_fit_se2",
    "weighted_procrustes_se2",
    "welsch_loss",
    "welsch_weights",
]
