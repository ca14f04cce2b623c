"""Association, registration and detection metrics."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .geometry import ObjectBox, RigidTransform2, rotated_box_iou, wrap_angle


def association_pr(predicted: Iterable[tuple[int, int]], truth: Iterable[tuple[int, int]]) -> tuple[float, float]:
    """Precision and recall of predicted pairs against the true pairs.

    Empty prediction scores precision 1.0 only when the truth is empty too;
    empty truth scores recall 1.0.
    """
    pred = {tuple(p) for p in predicted}
    gt = {tuple(p) for p in truth}
    hit = len(pred & gt)
    if pred:
        precision = hit / len(pred)
    else:
        precision = 1.0 if not gt else 0.0
    recall = hit / len(gt) if gt else 1.0
    return precision, recall


def average_distance(
    predicted: Iterable[tuple[int, int]],
    ego_truth: Sequence[ObjectBox],
    coop_truth: Sequence[ObjectBox],
) -> tuple[float, bool]:
    """Mean ground-truth distance between matched objects.

    ``ego_truth[k]`` / ``coop_truth[k]`` are the true boxes behind view index
    ``k``, in any common frame. Returns ``(distance, empty)``; an empty match
    set yields ``(0.0, True)``.
    """
    pairs = list(predicted)
    if not pairs:
        return 0.0, True
    d = [math.hypot(ego_truth[a].x - coop_truth[b].x, ego_truth[a].y - coop_truth[b].y) for a, b in pairs]
    return float(np.mean(d)), False


def rre(truth: RigidTransform2, estimate: RigidTransform2) -> float:
    """Relative rotation error in degrees, in [0, 180]."""
    return abs(math.degrees(wrap_angle(estimate.angle - truth.angle)))


def rte(truth: RigidTransform2, estimate: RigidTransform2) -> float:
    return math.hypot(truth.tx - estimate.tx, truth.ty - estimate.ty)


def map_at_iou(fused: Sequence[ObjectBox], truth: Sequence[ObjectBox], iou_thr: float = 0.7) -> float:
    """All-point interpolated average precision for a single class.

    Predictions are visited by descending score (stable for ties); each claims
    the unmatched truth box of highest IoU if that IoU exceeds ``iou_thr``.
    """
    if not truth:
        return 1.0 if not fused else 0.0
    if not fused:
        return 0.0
    order = sorted(range(len(fused)), key=lambda k: -fused[k].score)
    taken = [False] * len(truth)
    tp = np.zeros(len(order))
    for r, k in enumerate(order):
        best, best_iou = -1, iou_thr
        for g, t in enumerate(truth):
            if taken[g]:
                continue
            iou = rotated_box_iou(fused[k], t)
            if iou > best_iou:
                best, best_iou = g, iou
        if best >= 0:
            taken[best] = True
            tp[r] = 1.0
    ctp = np.cumsum(tp)
    recall = ctp / len(truth)
    precision = ctp / np.arange(1, len(order) + 1)
    # precision envelope, then area under the step curve
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[1.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))
