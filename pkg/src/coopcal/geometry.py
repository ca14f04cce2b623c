"""Planar rigid-body primitives shared by every stage of the pipeline.

Conventions: x forward, y left, headings measured counter-clockwise from +x,
angles in radians, lengths in meters. A ``RigidTransform2`` ``T`` maps points
expressed in a source frame into a target frame via ``p' = R(angle) p + t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Hashable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Degenerate polygon intersections below this area count as empty.
AREA_EPS = 1e-12


def wrap_angle(a: float) -> float:
    """Wrap ``a`` into (-pi, pi]."""
    w = math.remainder(a, TWO_PI)
    if w == -math.pi:
        return math.pi
    return w


def wrap_2pi(a: float) -> float:
    """Wrap ``a`` into [0, 2*pi)."""
    w = math.fmod(a, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    if w >= TWO_PI:
        w = 0.0
    return w


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose2:
    """Position and heading of an agent or object in some frame."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_2pi(float(self.heading)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_transform(self) -> RigidTransform2:
        """Transform taking body-frame coordinates of this pose to its parent frame."""
        return RigidTransform2(self.heading, self.x, self.y)


@dataclass(frozen=True)
class RigidTransform2:
    """SE(2) element stored as an angle plus translation.

    The rotation matrix is only materialized on demand, so it is orthonormal
    with determinant +1 by construction.
    """

    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    @classmethod
    def identity(cls) -> RigidTransform2:
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> RigidTransform2:
        m = np.asarray(m, dtype=float)
        return cls(math.atan2(m[1, 0], m[0, 0]), float(m[0, 2]), float(m[1, 2]))

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.angle)

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    def matrix(self) -> np.ndarray:
        """3x3 homogeneous matrix."""
        m = np.eye(3)
        m[:2, :2] = self.rotation
        m[0, 2], m[1, 2] = self.tx, self.ty
        return m

    def apply(self, p) -> np.ndarray:
        """Apply to a single point of shape (2,) or a batch of shape (N, 2)."""
        p = np.asarray(p, dtype=float)
        c, s = math.cos(self.angle), math.sin(self.angle)
        x, y = p[..., 0], p[..., 1]
        return np.stack([c * x - s * y + self.tx, s * x + c * y + self.ty], axis=-1)

    def __matmul__(self, other: RigidTransform2) -> RigidTransform2:
        return compose(self, other)


def compose(a: RigidTransform2, b: RigidTransform2) -> RigidTransform2:
    """Return ``a o b``, i.e. the transform ``p -> a(b(p))``."""
    c, s = math.cos(a.angle), math.sin(a.angle)
    return RigidTransform2(
        wrap_angle(a.angle + b.angle),
        c * b.tx - s * b.ty + a.tx,
        s * b.tx + c * b.ty + a.ty,
    )


def invert(t: RigidTransform2) -> RigidTransform2:
    c, s = math.cos(t.angle), math.sin(t.angle)
    # -R^T t
    return RigidTransform2(
        wrap_angle(-t.angle),
        -(c * t.tx + s * t.ty),
        -(-s * t.tx + c * t.ty),
    )


def apply(t: RigidTransform2, p) -> np.ndarray:
    return t.apply(p)


def relative_transform_from_poses(ego_pose: Pose2, coop_pose: Pose2) -> RigidTransform2:
    """Transform from the cooperative agent's body frame into the ego body frame."""
    return compose(invert(ego_pose.as_transform()), coop_pose.as_transform())


@dataclass(frozen=True)
class ObjectBox:
    """One detected (or ground-truth) object in bird's-eye view.

    ``height`` is carried through I/O but ignored by every algorithm.
    """

    id: Hashable
    x: float
    y: float
    heading: float
    height: float = 1.6
    width: float = 1.8
    length: float = 4.5
    score: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_2pi(float(self.heading)))
        if not (self.height > 0 and self.width > 0 and self.length > 0):
            raise ValueError(f"box {self.id!r}: dimensions must be positive")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"box {self.id!r}: score must lie in [0, 1]")

    @property
    def pose(self) -> Pose2:
        return Pose2(self.x, self.y, self.heading)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def dims(self) -> tuple[float, float, float]:
        return (self.height, self.width, self.length)

    def transformed(self, t: RigidTransform2) -> ObjectBox:
        x, y = t.apply((self.x, self.y))
        return replace(self, x=float(x), y=float(y), heading=self.heading + t.angle)

    def corners(self) -> np.ndarray:
        """BEV footprint corners, counter-clockwise, shape (4, 2)."""
        hl, hw = 0.5 * self.length, 0.5 * self.width
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        return self.pose.as_transform().apply(local)


def transform_boxes(boxes: Sequence[ObjectBox], t: RigidTransform2) -> list[ObjectBox]:
    return [b.transformed(t) for b in boxes]


def positions(boxes: Sequence[ObjectBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 2))
    return np.array([[b.x, b.y] for b in boxes], dtype=float)


def headings(boxes: Sequence[ObjectBox]) -> np.ndarray:
    return np.array([b.heading for b in boxes], dtype=float)


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of ``subject`` by the convex CCW polygon ``clip``."""
    out = [tuple(p) for p in subject]
    n = len(clip)
    for k in range(n):
        if not out:
            break
        ax, ay = clip[k]
        bx, by = clip[(k + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(p):
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        inp, out = out, []
        prev = inp[-1]
        sp = side(prev)
        for cur in inp:
            sc = side(cur)
            if sc >= 0.0:
                if sp < 0.0:
                    out.append(_intersect(prev, cur, sp, sc))
                out.append(cur)
            elif sp >= 0.0:
                out.append(_intersect(prev, cur, sp, sc))
            prev, sp = cur, sc
    return np.array(out, dtype=float).reshape(-1, 2)


def _intersect(p, q, sp, sq):
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def rotated_box_iou(a: ObjectBox, b: ObjectBox) -> float:
    """Exact BEV intersection-over-union of two oriented rectangles."""
    # Cheap rejection on circumscribed circles.
    ra = 0.5 * math.hypot(a.length, a.width)
    rb = 0.5 * math.hypot(b.length, b.width)
    if math.hypot(a.x - b.x, a.y - b.y) > ra + rb:
        return 0.0
    inter = polygon_area(clip_polygon(a.corners(), b.corners()))
    if inter < AREA_EPS:
        return 0.0
    union = a.length * a.width + b.length * b.width - inter
    return float(min(1.0, max(0.0, inter / union)))


__all__ = [
    "AREA_EPS",
    "ObjectBox",
    "Pose2",
    "RigidTransform2",
    "apply",
    "clip_polygon",
    "compose",
    "headings",
    "invert",
    "polygon_area",
    "positions",
    "relative_transform_from_poses",
    "rotated_box_iou",
    "rotation_matrix",
    "transform_boxes",
    "wrap_2pi",
    "wrap_angle",
]
