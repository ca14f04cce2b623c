import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coopcal.context import DetectionSet
from coopcal.estimator import (
    DegenerateConfigurationError,
    RobustFitParams,
    calibrate,
    calibrated_transform,
    robust_fit_points,
    weighted_procrustes_se2,
    welsch_loss,
    welsch_weights,
)
from coopcal.geometry import ObjectBox, Pose2, RigidTransform2, compose, invert, wrap_angle


def close(a, b, tol):
    return abs(wrap_angle(a.angle - b.angle)) <= tol and math.hypot(a.tx - b.tx, a.ty - b.ty) <= tol


def sse(t, e, c, w=None):
    r2 = np.sum((e - t.apply(c)) ** 2, axis=1)
    return float(np.sum(r2 if w is None else w * r2))


# --- weighted Procrustes ----------------------------------------------------------


def test_procrustes_identity():
    pts = np.random.default_rng(0).normal(size=(6, 2))
    assert close(weighted_procrustes_se2(pts, pts), RigidTransform2.identity(), 1e-12)


def test_procrustes_recovers_known_transform():
    T = RigidTransform2(math.radians(30), 1.0, 2.0)
    ego = np.random.default_rng(1).uniform(-10, 10, size=(8, 2))
    coop = invert(T).apply(ego)
    assert close(weighted_procrustes_se2(ego, coop), T, 1e-10)


def test_procrustes_two_points_exact():
    T = RigidTransform2(-1.2, 4.0, -0.5)
    coop = np.array([[0.0, 0.0], [3.0, 1.0]])
    assert close(weighted_procrustes_se2(T.apply(coop), coop), T, 1e-12)


def test_procrustes_degenerate():
    with pytest.raises(DegenerateConfigurationError):
        weighted_procrustes_se2(np.zeros((3, 2)), np.ones((3, 2)))
    with pytest.raises(DegenerateConfigurationError):
        weighted_procrustes_se2(np.ones((1, 2)), np.ones((1, 2)))


def test_procrustes_beats_perturbations():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        e = rng.normal(0, 10, size=(n, 2))
        c = rng.normal(0, 10, size=(n, 2))
        w = rng.uniform(0.01, 1.0, size=n)
        t = weighted_procrustes_se2(e, c, w)
        base = sse(t, e, c, w)
        d = rng.normal(size=3) * rng.choice([1e-4, 1e-2, 1.0])
        other = RigidTransform2(t.angle + d[0], t.tx + d[1], t.ty + d[2])
        assert base <= sse(other, e, c, w) + 1e-9 * (1 + base)


@given(
    st.floats(-math.pi, math.pi),
    st.floats(-50, 50),
    st.floats(-50, 50),
    st.floats(-math.pi, math.pi),
    st.floats(-50, 50),
    st.floats(-50, 50),
    st.integers(0, 2**32 - 1),
)
def test_procrustes_equivariance(a1, x1, y1, a2, x2, y2, seed):
    # moving the ego points by G moves the solution to G o T
    rng = np.random.default_rng(seed)
    e = rng.normal(0, 10, size=(7, 2))
    c = rng.normal(0, 10, size=(7, 2))
    G = RigidTransform2(a1, x1, y1)
    t = weighted_procrustes_se2(e, c)
    tg = weighted_procrustes_se2(G.apply(e), c)
    assert close(tg, compose(G, t), 1e-8)
    H = RigidTransform2(a2, x2, y2)
    th = weighted_procrustes_se2(e, H.apply(c))
    assert close(th, compose(t, invert(H)), 1e-8)


# --- Welsch IRLS -------------------------------------------------------------------


def test_welsch_kernel():
    r = np.array([0.0, 1.0, 100.0])
    w = welsch_weights(r, 1.0)
    assert w[0] == 1.0 and w[1] == pytest.approx(math.exp(-1)) and w[2] == 0.0
    assert welsch_loss(np.zeros(3), 2.0) == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        RobustFitParams(scale_schedule=(1.0, 2.0))
    with pytest.raises(ValueError):
        RobustFitParams(kernel="huber")
    with pytest.raises(ValueError):
        RobustFitParams(scale_floor_factor=-1)


def test_zero_residual_pairs():
    pts = np.random.default_rng(3).normal(0, 5, size=(6, 2))
    t, w = robust_fit_points(pts, pts)
    assert close(t, RigidTransform2.identity(), 1e-12)
    np.testing.assert_allclose(w, 1.0)


def test_single_outlier_recovers_inlier_fit():
    T = RigidTransform2(math.radians(5), 0.4, -0.3)
    rng = np.random.default_rng(4)
    coop = rng.uniform(-15, 15, size=(10, 2))
    ego = T.apply(coop)
    ego[7] += (30.0, 40.0)  # 50 m displacement
    inlier = np.arange(10) != 7
    oracle = weighted_procrustes_se2(ego[inlier], coop[inlier])
    t, w = robust_fit_points(ego, coop)
    assert close(t, oracle, 1e-3)
    assert w[7] < 1e-4


@pytest.mark.parametrize("floor", [0.0, 3.0])
def test_single_outlier_any_floor(floor):
    T = RigidTransform2(-0.2, 2.0, 1.0)
    coop = np.random.default_rng(5).uniform(-15, 15, size=(10, 2))
    ego = T.apply(coop)
    ego[0] += (50.0, 0.0)
    t, w = robust_fit_points(ego, coop, RobustFitParams(scale_floor_factor=floor))
    assert close(t, T, 1e-3) and w[0] < 1e-4


def test_gaussian_noise_translation_bound():
    # statistical efficiency: within 3 sigma/sqrt(n) on nearly every draw
    T = RigidTransform2(math.radians(5), 0.4, -0.3)
    sigma, n = 0.3, 30
    bound = 3 * sigma / math.sqrt(n)
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        ego = rng.uniform(-20, 20, size=(n, 2))
        coop = invert(T).apply(ego) + rng.normal(0, sigma, size=(n, 2))
        t, _ = robust_fit_points(ego, coop)
        hits += math.hypot(t.tx - T.tx, t.ty - T.ty) <= bound
    assert hits >= 95


def test_irls_monotone_per_scale():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(3, 15))
        T = RigidTransform2(rng.uniform(-0.5, 0.5), *rng.uniform(-3, 3, 2))
        coop = rng.uniform(-20, 20, size=(n, 2))
        ego = T.apply(coop) + rng.normal(0, rng.uniform(0, 1), size=(n, 2))
        k = int(rng.integers(0, n // 2 + 1))
        ego[:k] += rng.uniform(-30, 30, size=(k, 2))
        trace = []
        robust_fit_points(ego, coop, trace=lambda s, it, obj: trace.append((s, it, obj)))
        stage = []
        for _, it, obj in trace:
            if it == 0:
                stage = [obj]
                continue
            assert obj <= stage[-1] + 1e-9 * (1 + abs(stage[-1]))
            stage.append(obj)


def test_degenerate_inputs():
    with pytest.raises(DegenerateConfigurationError):
        robust_fit_points(np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(DegenerateConfigurationError):
        robust_fit_points(np.random.default_rng(0).normal(size=(4, 2)), np.ones((4, 2)))


# --- calibration ----------------------------------------------------------------------


def view(points, agent="a"):
    return DetectionSet(agent, Pose2(0, 0), tuple(ObjectBox(k, x, y, 0.0) for k, (x, y) in enumerate(points)))


def test_calibrated_transform_examples():
    tt = RigidTransform2(0.3, 1.0, 2.0)
    assert close(calibrated_transform(RigidTransform2.identity(), tt), tt, 0)
    assert close(calibrated_transform(invert(tt), tt), RigidTransform2.identity(), 1e-12)


def test_calibrate_zero_noise_is_identity_correction():
    pts = [(0, 0), (5, 1), (-3, 7), (10, -4)]
    tt = RigidTransform2(0.1, 3, 3)
    res = calibrate([(k, k) for k in range(4)], view(pts), view(pts, "c"), tt)
    assert not res.fallback
    assert close(res.residual_correction, RigidTransform2.identity(), 1e-12)
    assert close(res.refined, tt, 1e-12)


def test_calibrate_fallbacks():
    tt = RigidTransform2(0.1, 3, 3)
    res = calibrate([(0, 0)], view([(0, 0), (1, 1)]), view([(0, 0), (1, 1)], "c"), tt)
    assert res.fallback and res.refined == tt
    res = calibrate([(0, 0), (1, 1)], view([(0, 0), (1, 1)]), view([(2, 2), (2, 2)], "c"), tt)
    assert res.fallback and res.refined == tt


def test_calibrate_recovers_offset():
    T_err = RigidTransform2(math.radians(-5), -3.0, 2.0)
    pts = np.random.default_rng(9).uniform(-20, 20, size=(12, 2))
    coop_in_ego = view(T_err.apply(pts), "c")
    tt = RigidTransform2(0.5, 10.0, 0.0)
    res = calibrate([(k, k) for k in range(12)], view(pts), coop_in_ego, tt)
    assert close(res.residual_correction, invert(T_err), 1e-9)
    assert close(res.refined, compose(invert(T_err), tt), 1e-9)
