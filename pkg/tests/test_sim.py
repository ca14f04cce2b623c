import math
from itertools import combinations

import numpy as np
import pytest

from coopcal.geometry import Pose2, invert, relative_transform_from_poses, wrap_angle
from coopcal.sim import (
    NoiseConfig,
    SceneGenerationError,
    SuiteConfig,
    corrupt_view,
    generate_frame,
    generate_scene,
    generate_suite,
    measured_pose,
    split_covisible,
    stream,
)

ZERO = NoiseConfig(sigma_p=0, sigma_theta=0, flip_prob=0)


def test_scene_sizes_and_gaps():
    assert generate_scene(0, rng=np.random.default_rng(0)) == []
    two = generate_scene(2, min_gap=4, rng=np.random.default_rng(0))
    assert math.hypot(two[0].x - two[1].x, two[0].y - two[1].y) >= 4
    for seed in range(100):
        s = generate_scene(30, (80, 80), 4, np.random.default_rng(seed))
        assert all(math.hypot(a.x - b.x, a.y - b.y) >= 4 for a, b in combinations(s, 2))
        assert all(abs(o.x) <= 40 and abs(o.y) <= 40 for o in s)


def test_scene_too_dense():
    with pytest.raises(SceneGenerationError):
        generate_scene(50, (10, 10), 4, np.random.default_rng(0), max_tries=50)


@pytest.mark.parametrize(
    "n,eta,ego,coop,cov",
    [(10, 1.0, 10, 10, 10), (10, 0.0, 5, 5, 0), (20, 0.6, 16, 16, 12), (7, 0.0, 4, 3, 0)],
)
def test_split_cardinalities(n, eta, ego, coop, cov):
    e, c, m = split_covisible(n, eta, np.random.default_rng(0))
    assert (len(e), len(c), len(m)) == (ego, coop, cov)
    assert set(e) | set(c) == set(range(n)) and set(e) & set(c) == set(m)


def test_split_rejects_bad_eta():
    with pytest.raises(ValueError):
        split_covisible(5, 1.5, np.random.default_rng(0))


def test_zero_noise_is_exact_body_frame():
    frame = generate_frame(0, SuiteConfig(n_objects=10, eta=1.0), ZERO)
    to_body = invert(frame.ego_truth_pose.as_transform())
    for k, g in enumerate(frame.ego_gt_index):
        truth = frame.ground_truth[g].transformed(to_body)
        o = frame.ego_view.objects[k]
        assert (o.x, o.y) == pytest.approx((truth.x, truth.y), abs=1e-12)
        assert wrap_angle(o.heading - truth.heading) == pytest.approx(0, abs=1e-12)


def test_fixed_offset_pose_measurement():
    truth = Pose2(1.0, 2.0, 0.3)
    m = measured_pose(truth, NoiseConfig(), np.random.default_rng(0))
    assert (m.x - truth.x, m.y - truth.y) == pytest.approx((3.0, 3.0))
    assert wrap_angle(m.heading - truth.heading) == pytest.approx(math.radians(5))


def test_ego_pose_is_truth_and_gnss_error_is_offset():
    f = generate_frame(3, SuiteConfig(), NoiseConfig())
    assert f.ego_view.pose_measurement == f.ego_truth_pose
    t_tilde = relative_transform_from_poses(f.ego_view.pose_measurement, f.coop_view.pose_measurement)
    assert f.T_true == relative_transform_from_poses(f.ego_truth_pose, f.coop_truth_pose)
    assert math.hypot(t_tilde.tx - f.T_true.tx, t_tilde.ty - f.T_true.ty) == pytest.approx(math.sqrt(18))


def test_position_noise_std():
    objs = generate_scene(1, rng=np.random.default_rng(0)) * 10_000
    view = corrupt_view(objs, Pose2(0, 0, 0), NoiseConfig(sigma_p=0.3, flip_prob=0), np.random.default_rng(1))
    d = np.array([[v.x - objs[0].x, v.y - objs[0].y] for v in view.objects])
    for axis in range(2):
        assert 0.27 <= d[:, axis].std() <= 0.33


def test_flip_probability():
    objs = generate_scene(1, rng=np.random.default_rng(0)) * 4000
    view = corrupt_view(objs, Pose2(0, 0, 0), NoiseConfig(sigma_p=0, sigma_theta=0), np.random.default_rng(2))
    flips = np.mean([math.cos(v.heading - objs[0].heading) < 0 for v in view.objects])
    assert 0.46 < flips < 0.54


def test_gaussian_localization_mode():
    cfg = NoiseConfig(loc_mode="gaussian", sigma_p_L=2.0, sigma_theta_L=0.0)
    d = np.array([measured_pose(Pose2(0, 0), cfg, np.random.default_rng(s)).x for s in range(4000)])
    assert 1.85 < d.std() < 2.15
    zero = NoiseConfig(loc_mode="gaussian")
    assert measured_pose(Pose2(1, 1, 1), zero, np.random.default_rng(0)) == Pose2(1, 1, 1)


def test_streams_are_independent():
    a = generate_frame(0, SuiteConfig(), NoiseConfig(loc_mode="gaussian", sigma_p_L=0.5))
    b = generate_frame(0, SuiteConfig(), NoiseConfig(loc_mode="gaussian", sigma_p_L=2.5))
    assert a.ground_truth == b.ground_truth and a.ego_view == b.ego_view
    assert a.coop_view.objects == b.coop_view.objects
    assert a.coop_view.pose_measurement != b.coop_view.pose_measurement
    assert stream(1, 2, "scene").random() == stream(1, 2, "scene").random()
    assert stream(1, 2, "scene").random() != stream(1, 2, "ego").random()


def test_suite_determinism_and_truth_pairs():
    s1 = generate_suite(SuiteConfig(n_frames=3), NoiseConfig(seed=5))
    s2 = generate_suite(SuiteConfig(n_frames=3), NoiseConfig(seed=5))
    assert s1 == s2
    for f in s1:
        for a, b in f.covisible_truth:
            assert f.ego_gt_index[a] == f.coop_gt_index[b]
        assert len(f.covisible_truth) == 18


def test_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(sigma_p=-1)
    with pytest.raises(ValueError):
        NoiseConfig(loc_mode="drift")
    with pytest.raises(ValueError):
        SuiteConfig(eta=2)
