"""Merge ego and calibrated cooperative detections with hard NMS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .geometry import ObjectBox, rotated_box_iou

SCORE_POLICIES = ("keep_max", "prefer_ego")


@dataclass(frozen=True)
class FusionParams:
    iou_threshold: float = 0.15
    score_policy: str = "prefer_ego"

    def __post_init__(self):
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError("iou_threshold must lie in (0, 1)")
        if self.score_policy not in SCORE_POLICIES:
            raise ValueError(f"unknown score_policy {self.score_policy!r}")


def nms(boxes: Sequence[ObjectBox], iou_threshold: float) -> list[int]:
    """Greedy hard NMS over ``boxes`` already in priority order; returns kept indices."""
    keep: list[int] = []
    suppressed = [False] * len(boxes)
    for k, b in enumerate(boxes):
        if suppressed[k]:
            continue
        keep.append(k)
        for m in range(k + 1, len(boxes)):
            if not suppressed[m] and rotated_box_iou(b, boxes[m]) > iou_threshold:
                suppressed[m] = True
    return keep


def fuse(
    ego_boxes: Sequence[ObjectBox],
    coop_boxes_calibrated: Sequence[ObjectBox],
    params: FusionParams | None = None,
) -> list[ObjectBox]:
    """Deduplicate the union of both sets; boxes are returned unmodified.

    Priority is score (descending); ``prefer_ego`` breaks equal scores toward
    ego boxes, then input order (ids are opaque, so original position stands
    in for id order).
    """
    params = params or FusionParams()
    tagged = [(b, 0, k) for k, b in enumerate(ego_boxes)]
    tagged += [(b, 1, k) for k, b in enumerate(coop_boxes_calibrated)]
    if params.score_policy == "prefer_ego":
        tagged.sort(key=lambda t: (-t[0].score, t[1], t[2]))
    else:
        # keep_max: score only; ties keep concatenation order
        tagged.sort(key=lambda t: -t[0].score)
    ordered = [t[0] for t in tagged]
    return [ordered[k] for k in nms(ordered, params.iou_threshold)]
