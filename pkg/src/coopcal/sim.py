"""Synthetic two-agent scenes with controlled outliers and noise.

Random streams
--------------
Every frame draws from independent PCG64 streams derived from
``SeedSequence(seed, spawn_key=(frame_index, stream))`` where ``stream`` is
one of :data:`STREAMS`. Changing, say, the localization noise therefore never
perturbs the scene layout or the perception noise of the same frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .context import DetectionSet
from .geometry import (
    ObjectBox,
    Pose2,
    RigidTransform2,
    invert,
    relative_transform_from_poses,
)

STREAMS = {"scene": 0, "split": 1, "ego": 2, "coop": 3, "localization": 4, "agents": 5}
LOC_MODES = ("fixed", "gaussian")

CAR_LENGTH = (3.8, 5.2)
CAR_WIDTH = (1.6, 2.1)
CAR_HEIGHT = (1.4, 1.8)


class SceneGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    """Perception and localization corruption for one suite.

    ``loc_mode="fixed"`` shifts the coop pose measurement by exactly
    ``(loc_dx, loc_dy, loc_dtheta)`` in the world frame; ``"gaussian"`` draws
    that offset per frame from zero-mean normals with stds
    ``sigma_p_L`` (per axis) and ``sigma_theta_L``.
    """

    sigma_p: float = 0.3
    sigma_theta: float = math.radians(10.0)
    flip_prob: float = 0.5
    loc_mode: str = "fixed"
    loc_dx: float = 3.0
    loc_dy: float = 3.0
    loc_dtheta: float = math.radians(5.0)
    sigma_p_L: float = 0.0
    sigma_theta_L: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_p, self.sigma_theta, self.sigma_p_L, self.sigma_theta_L) < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must lie in [0, 1]")
        if self.loc_mode not in LOC_MODES:
            raise ValueError(f"loc_mode must be one of {LOC_MODES}")


def stream(seed: int, frame_index: int, name: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(frame_index), STREAMS[name]))
    return np.random.Generator(np.random.PCG64(ss))


def generate_scene(
    n: int,
    area: tuple[float, float] = (80.0, 80.0),
    min_gap: float = 4.0,
    rng: Optional[np.random.Generator] = None,
    max_tries: int = 2000,
) -> list[ObjectBox]:
    """``n`` car-like boxes in a world-frame rectangle centered on the origin.

    Positions are rejection-sampled so that all centers are at least
    ``min_gap`` apart; each box gets up to ``max_tries`` attempts.
    """
    rng = rng if rng is not None else np.random.default_rng()
    w, h = area
    pts: list[np.ndarray] = []
    boxes: list[ObjectBox] = []
    for k in range(n):
        for _ in range(max_tries):
            p = rng.uniform((-w / 2, -h / 2), (w / 2, h / 2))
            if all(np.hypot(*(p - q)) >= min_gap for q in pts):
                break
        else:
            raise SceneGenerationError(f"could not place box {k} of {n} in {w}x{h} m at gap {min_gap} m")
        pts.append(p)
        boxes.append(
            ObjectBox(
                id=k,
                x=float(p[0]),
                y=float(p[1]),
                heading=float(rng.uniform(0.0, 2 * math.pi)),
                height=float(rng.uniform(*CAR_HEIGHT)),
                width=float(rng.uniform(*CAR_WIDTH)),
                length=float(rng.uniform(*CAR_LENGTH)),
                score=1.0,
            )
        )
    return boxes


def split_covisible(n: int, eta: float, rng: np.random.Generator):
    """Split ``range(n)`` into two overlapping views.

    ``round(eta * n)`` objects are seen by both agents; the rest are dealt out
    evenly, the odd one going to the ego agent.

    Returns ``(ego_indices, coop_indices, covisible_indices)`` as sorted lists.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    m = int(math.floor(eta * n + 0.5))
    perm = rng.permutation(n)
    cov = perm[:m]
    rest = perm[m:]
    n_ego = (len(rest) + 1) // 2
    ego = np.concatenate([cov, rest[:n_ego]])
    coop = np.concatenate([cov, rest[n_ego:]])
    return sorted(ego.tolist()), sorted(coop.tolist()), sorted(cov.tolist())


def measured_pose(truth: Pose2, cfg: NoiseConfig, rng: np.random.Generator) -> Pose2:
    if cfg.loc_mode == "fixed":
        dx, dy, dth = cfg.loc_dx, cfg.loc_dy, cfg.loc_dtheta
    else:
        dx, dy = rng.normal(0.0, cfg.sigma_p_L, size=2)
        dth = rng.normal(0.0, cfg.sigma_theta_L)
    return Pose2(truth.x + float(dx), truth.y + float(dy), truth.heading + float(dth))


def corrupt_view(
    objects: Sequence[ObjectBox],
    agent_truth_pose: Pose2,
    cfg: NoiseConfig,
    rng: np.random.Generator,
    agent_id="agent",
    localization_rng: Optional[np.random.Generator] = None,
) -> DetectionSet:
    """Observe world-frame ``objects`` from ``agent_truth_pose`` with perception noise.

    Noise is added in the agent's body frame. The pose measurement is the
    truth unless ``localization_rng`` is given, in which case it is corrupted
    according to ``cfg.loc_mode``.
    """
    to_body = invert(agent_truth_pose.as_transform())
    n = len(objects)
    dp = rng.normal(0.0, 1.0, size=(n, 2)) * cfg.sigma_p
    dth = rng.normal(0.0, 1.0, size=n) * cfg.sigma_theta
    flips = rng.uniform(size=n) < cfg.flip_prob
    out = []
    for k, o in enumerate(objects):
        b = o.transformed(to_body)
        out.append(
            replace(
                b,
                id=f"{agent_id}-{k}",
                x=b.x + float(dp[k, 0]),
                y=b.y + float(dp[k, 1]),
                heading=b.heading + float(dth[k]) + (math.pi if flips[k] else 0.0),
            )
        )
    pose = agent_truth_pose if localization_rng is None else measured_pose(agent_truth_pose, cfg, localization_rng)
    return DetectionSet(agent_id, pose, tuple(out))


@dataclass(frozen=True)
class ScenarioFrame:
    """One synthetic frame with everything needed to score a method.

    ``ego_gt_index[k]`` is the ground-truth index of ego detection ``k`` (same
    for coop). ``covisible_truth`` pairs view indices of the same object.
    """

    frame_index: int
    seed: int
    eta: float
    noise: NoiseConfig
    ground_truth: tuple[ObjectBox, ...]
    ego_truth_pose: Pose2
    coop_truth_pose: Pose2
    ego_view: DetectionSet
    coop_view: DetectionSet
    ego_gt_index: tuple[int, ...]
    coop_gt_index: tuple[int, ...]
    covisible_truth: tuple[tuple[int, int], ...]
    T_true: RigidTransform2 = field(default_factory=RigidTransform2.identity)


@dataclass(frozen=True)
class SuiteConfig:
    n_frames: int = 200
    n_objects: int = 30
    area: tuple[float, float] = (80.0, 80.0)
    min_gap: float = 4.0
    eta: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "area", tuple(float(a) for a in self.area))
        if self.n_frames < 0 or self.n_objects < 0:
            raise ValueError("n_frames and n_objects must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.min_gap < 0 or min(self.area) <= 0:
            raise ValueError("area must be positive and min_gap >= 0")


def generate_frame(frame_index: int, suite: SuiteConfig, noise: NoiseConfig) -> ScenarioFrame:
    seed = noise.seed
    scene = generate_scene(suite.n_objects, suite.area, suite.min_gap, stream(seed, frame_index, "scene"))
    split_rng = stream(seed, frame_index, "split")
    ego_idx, coop_idx, _ = split_covisible(len(scene), suite.eta, split_rng)
    # shuffle view order so list position carries no correspondence information
    ego_idx = [int(x) for x in split_rng.permutation(ego_idx)]
    coop_idx = [int(x) for x in split_rng.permutation(coop_idx)]

    arng = stream(seed, frame_index, "agents")
    w, h = suite.area

    def agent_pose():
        x, y = arng.uniform((-w / 4, -h / 4), (w / 4, h / 4))
        return Pose2(float(x), float(y), float(arng.uniform(0.0, 2 * math.pi)))

    ego_pose = agent_pose()
    coop_pose = agent_pose()
    ego_view = corrupt_view([scene[k] for k in ego_idx], ego_pose, noise, stream(seed, frame_index, "ego"), "ego")
    coop_view = corrupt_view(
        [scene[k] for k in coop_idx],
        coop_pose,
        noise,
        stream(seed, frame_index, "coop"),
        "coop",
        localization_rng=stream(seed, frame_index, "localization"),
    )
    where = {g: k for k, g in enumerate(coop_idx)}
    cov = tuple(sorted((a, where[g]) for a, g in enumerate(ego_idx) if g in where))
    return ScenarioFrame(
        frame_index=frame_index,
        seed=seed,
        eta=suite.eta,
        noise=noise,
        ground_truth=tuple(scene),
        ego_truth_pose=ego_pose,
        coop_truth_pose=coop_pose,
        ego_view=ego_view,
        coop_view=coop_view,
        ego_gt_index=tuple(ego_idx),
        coop_gt_index=tuple(coop_idx),
        covisible_truth=cov,
        T_true=relative_transform_from_poses(ego_pose, coop_pose),
    )


def generate_suite(suite: SuiteConfig, noise: NoiseConfig) -> list[ScenarioFrame]:
    return [generate_frame(k, suite, noise) for k in range(suite.n_frames)]
