"""Per-agent detection sets and intra-agent geometric contexts.

A context describes one object's surroundings: the offsets from that object
to every other object of the same agent, rotated into the object's own
heading-aligned frame. Because both the offsets and the heading move together
under a rigid motion, contexts do not depend on where the agent thinks it is.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Hashable, Sequence

import numpy as np

from .geometry import (
    ObjectBox,
    Pose2,
    relative_transform_from_poses,
    transform_boxes,
)


class SparseSceneWarning(UserWarning):
    """Raised (as a warning) when a set holds too few objects to form contexts."""


@dataclass(frozen=True)
class DetectionSet:
    """One agent's detections for a frame, in that agent's body frame.

    ``pose_measurement`` is the agent's own (possibly noisy) localization in a
    shared world frame.
    """

    agent_id: Hashable
    pose_measurement: Pose2
    objects: tuple[ObjectBox, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"agent {self.agent_id!r}: duplicate object ids")

    def __len__(self) -> int:
        return len(self.objects)

    def positions(self) -> np.ndarray:
        if not self.objects:
            return np.zeros((0, 2))
        return np.array([[o.x, o.y] for o in self.objects], dtype=float)

    def headings(self) -> np.ndarray:
        return np.array([o.heading for o in self.objects], dtype=float)


@dataclass(frozen=True)
class ContextMatrix:
    owner_index: int
    vectors: np.ndarray  # shape (2, N - 1)
    neighbor_indices: tuple[int, ...]


def to_ego_frame(coop: DetectionSet, ego_pose: Pose2) -> DetectionSet:
    """Re-express ``coop``'s objects in the ego body frame using localization only."""
    t = relative_transform_from_poses(ego_pose, coop.pose_measurement)
    return replace(coop, objects=tuple(transform_boxes(coop.objects, t)))


def canonicalize_headings(objects: Sequence[ObjectBox]) -> list[ObjectBox]:
    """Flip every heading that points backwards (cos < 0) in the current frame."""
    out = []
    for o in objects:
        if math.cos(o.heading) < 0.0:
            o = replace(o, heading=o.heading + math.pi)
        out.append(o)
    return out


def context_tensor(pos: np.ndarray, heading: np.ndarray) -> np.ndarray:
    """Dense contexts for all objects at once.

    Returns ``C`` of shape (N, N, 2) with ``C[i, k] = R(heading_i)^T (p_k - p_i)``.
    The diagonal ``C[i, i]`` is zero and must be treated as absent.
    """
    pos = np.asarray(pos, dtype=float).reshape(-1, 2)
    heading = np.asarray(heading, dtype=float).reshape(-1)
    d = pos[None, :, :] - pos[:, None, :]
    c = np.cos(heading)[:, None]
    s = np.sin(heading)[:, None]
    out = np.empty_like(d)
    out[..., 0] = c * d[..., 0] + s * d[..., 1]
    out[..., 1] = -s * d[..., 0] + c * d[..., 1]
    idx = np.arange(len(pos))
    out[idx, idx] = 0.0
    return out


def build_contexts(objects: Sequence[ObjectBox]) -> list[ContextMatrix]:
    """Build one context per object; the object itself is left out of its own context."""
    n = len(objects)
    if n < 2:
        warnings.warn(f"scene too sparse for contexts ({n} object(s))", SparseSceneWarning, stacklevel=2)
        return []
    pos = np.array([[o.x, o.y] for o in objects], dtype=float)
    hd = np.array([o.heading for o in objects], dtype=float)
    tensor = context_tensor(pos, hd)
    out = []
    for i in range(n):
        nbrs = tuple(k for k in range(n) if k != i)
        out.append(ContextMatrix(i, tensor[i, list(nbrs)].T.copy(), nbrs))
    return out
