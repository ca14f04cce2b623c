"""Per-frame evaluation of the calibration methods."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .context import to_ego_frame
from .estimator import RobustFitParams, calibrate
from .fusion import FusionParams, fuse
from .geometry import RigidTransform2, compose, invert, relative_transform_from_poses, transform_boxes
from .icp import icp_associate
from .matcher import MatchParams, MatchSet, associate
from .metrics import association_pr, average_distance, map_at_iou, rre, rte
from .sim import ScenarioFrame

METHODS = ("cbm", "cbm_no_consensus", "icp", "gnss")


@dataclass(frozen=True)
class ICPParams:
    max_iters: int = 50
    tol: float = 1e-6
    reject_radius: float = 5.0

    def __post_init__(self):
        if self.max_iters < 1 or self.tol <= 0 or self.reject_radius <= 0:
            raise ValueError("ICP max_iters, tol and reject_radius must be positive")


@dataclass(frozen=True)
class MethodParams:
    match: MatchParams = field(default_factory=MatchParams)
    fit: RobustFitParams = field(default_factory=RobustFitParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    icp: ICPParams = field(default_factory=ICPParams)
    map_iou: float = 0.7


@dataclass(frozen=True)
class FrameResult:
    method: str
    frame_index: int
    matches: MatchSet
    estimate: RigidTransform2
    fallback: bool
    runtime_ms: float
    row: dict


def calibrate_frame(frame: ScenarioFrame, method: str, params: MethodParams):
    """Run one method on one frame; returns ``(MatchSet, estimate, fallback)``."""
    ego, coop = frame.ego_view, frame.coop_view
    t_tilde = relative_transform_from_poses(ego.pose_measurement, coop.pose_measurement)
    if method == "gnss":
        return MatchSet(status="not_attempted"), t_tilde, True
    coop_in_ego = to_ego_frame(coop, ego.pose_measurement)
    if method in ("cbm", "cbm_no_consensus"):
        ms = associate(ego, coop_in_ego, params.match, consensus=(method == "cbm"))
        cal = calibrate(ms.pairs, ego, coop_in_ego, t_tilde, params.fit)
        return ms, cal.refined, cal.fallback
    if method == "icp":
        if len(ego) == 0 or len(coop) == 0:
            return MatchSet(status="no_match"), t_tilde, True
        corr, ms = icp_associate(
            ego.positions(),
            coop_in_ego.positions(),
            RigidTransform2.identity(),
            params.icp.max_iters,
            params.icp.tol,
            params.icp.reject_radius,
        )
        return ms, compose(corr, t_tilde), len(ms) == 0
    raise ValueError(f"unknown method {method!r}")


def evaluate_frame(
    frame: ScenarioFrame,
    method: str,
    params: Optional[MethodParams] = None,
    record_runtime: bool = True,
) -> FrameResult:
    params = params or MethodParams()
    t0 = time.perf_counter()
    ms, est, fallback = calibrate_frame(frame, method, params)
    elapsed = (time.perf_counter() - t0) * 1e3

    gt = frame.ground_truth
    if method == "gnss":
        precision = recall = ad = math.nan
    else:
        precision, recall = association_pr(ms.pairs, frame.covisible_truth)
        ego_truth = [gt[g] for g in frame.ego_gt_index]
        coop_truth = [gt[g] for g in frame.coop_gt_index]
        ad, empty = average_distance(ms.pairs, ego_truth, coop_truth)
        if empty:
            ad = math.nan

    fused = fuse(frame.ego_view.objects, transform_boxes(frame.coop_view.objects, est), params.fusion)
    seen = sorted(set(frame.ego_gt_index) | set(frame.coop_gt_index))
    world_to_ego = invert(frame.ego_truth_pose.as_transform())
    truth_boxes = transform_boxes([gt[g] for g in seen], world_to_ego)
    noise = frame.noise
    row = {
        "method": method,
        "seed": frame.seed,
        "eta": frame.eta,
        "sigma_p": noise.sigma_p,
        "sigma_theta": noise.sigma_theta,
        "sigma_p_L": noise.sigma_p_L,
        "sigma_theta_L": noise.sigma_theta_L,
        "precision": precision,
        "recall": recall,
        "ad_m": ad,
        "rre_deg": rre(frame.T_true, est),
        "rte_m": rte(frame.T_true, est),
        "map_07": map_at_iou(fused, truth_boxes, params.map_iou),
        "runtime_ms": elapsed if record_runtime else None,
    }
    return FrameResult(method, frame.frame_index, ms, est, fallback, elapsed, row)


def _job(args):
    frame, method, params, record_runtime = args
    return evaluate_frame(frame, method, params, record_runtime).row


def run_frames(
    frames: Sequence[ScenarioFrame],
    methods: Sequence[str],
    params: Optional[MethodParams] = None,
    workers: int = 1,
    record_runtime: bool = True,
) -> list[dict]:
    """Metric rows ordered by method, then frame, whatever the worker count."""
    params = params or MethodParams()
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    jobs = [(f, m, params, record_runtime) for m in methods for f in frames]
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def summarize(rows: Sequence[dict], keys: Sequence[str] = ("method",)) -> list[dict]:
    """Aggregate per-frame rows: means for association/mAP, medians for RRE/RTE."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key, rs in groups.items():

        def col(name):
            return np.array([np.nan if r[name] is None else r[name] for r in rs], dtype=float)

        def agg(fn, name):
            v = col(name)
            v = v[~np.isnan(v)]
            return float(fn(v)) if len(v) else math.nan

        rec = dict(zip(keys, key))
        rec.update(
            frames=len(rs),
            precision=agg(np.mean, "precision"),
            recall=agg(np.mean, "recall"),
            ad_m=agg(np.mean, "ad_m"),
            rre_deg_median=agg(np.median, "rre_deg"),
            rte_m_median=agg(np.median, "rte_m"),
            map_07=agg(np.mean, "map_07"),
            runtime_ms_mean=agg(np.mean, "runtime_ms"),
        )
        out.append(rec)
    return out
