"""Smoke tests for the gausskin python module."""

import math

import numpy as np
import pytest

import gausskin as gs


def test_quaternion_roundtrip():
    q = np.array([0.5, 0.5, 0.5, 0.5])
    r = gs.quat_to_matrix(q)
    assert r.shape == (3, 3)
    back = gs.matrix_to_quat(r)
    assert gs.angular_distance(q, back) < 1e-12


def test_compose_matches_matrix_product():
    a = np.array([math.cos(0.4), 0.0, 0.0, math.sin(0.4)])
    b = np.array([math.cos(0.3), math.sin(0.3), 0.0, 0.0])
    lhs = gs.quat_to_matrix(gs.quat_compose(a, b))
    rhs = gs.quat_to_matrix(a) @ gs.quat_to_matrix(b)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_quat_average_bisector():
    bones = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)],
        ]
    )
    weights = np.array([0.5, 0.5])
    for solver in ("exact", "power"):
        avg = gs.quat_average(bones, weights, solver=solver)
        expected = np.array([math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)])
        assert gs.angular_distance(avg, expected) < 1e-6


def test_sh_rotation_equivariance():
    rng = np.random.default_rng(3)
    coeffs = rng.uniform(-0.3, 0.3, size=(16, 3))
    r = gs.quat_to_matrix(np.array([math.cos(0.5), 0.2, 0.3, 0.4]) / np.linalg.norm([math.cos(0.5), 0.2, 0.3, 0.4]))
    rotated = gs.rotate_sh(coeffs, r)
    for _ in range(20):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        lhs = gs.sh_eval_color(rotated, d)
        rhs = gs.sh_eval_color(coeffs, r.T @ d)
        assert np.abs(lhs - rhs).max() < 1e-6


def test_basis_constant_term():
    b = gs.sh_basis(np.array([0.0, 0.0, 1.0]))
    assert b[0] == pytest.approx(0.28209479177387814, abs=0)


def test_identity_pose_is_neutral():
    cloud, skeleton, weights = gs.make_test_rig(3, 12, 10, seed=5)
    pose = gs.rest_pose(skeleton)
    posed = gs.skin(cloud, weights, skeleton, pose, mode="quat-avg")
    assert len(posed) == len(cloud)
    assert posed.mean_abs_det_minus_one == 0.0
    assert np.array_equal(posed.positions, np.asarray(cloud.positions, dtype=np.float64))


def test_render_and_metrics():
    cloud, skeleton, weights = gs.make_test_rig(3, 16, 12, seed=5)
    camera = gs.make_fixture_camera(skeleton, 128, 128)
    pose = gs.twist_pose(skeleton, 60.0)
    posed = gs.skin(cloud, weights, skeleton, pose, mode="quat-avg", solver="power", iters=15)
    assert posed.mean_abs_det_minus_one > 0.0

    rgb1, alpha1 = gs.render(posed, camera, workers=1)
    rgb8, alpha8 = gs.render(posed, camera, workers=8)
    assert rgb1.shape == (128, 128, 3)
    assert np.array_equal(rgb1, rgb8)
    assert np.array_equal(alpha1, alpha8)
    assert alpha1.sum() > 10.0

    assert math.isinf(gs.psnr(rgb1, rgb8))
    assert gs.ssim(rgb1, rgb8) == 1.0

    noisy = np.clip(rgb1 + 0.01, 0.0, 1.0)
    assert gs.psnr(rgb1, noisy) < math.inf
    assert gs.ssim(rgb1, noisy) < 1.0


def test_ply_roundtrip(tmp_path):
    cloud, _, _ = gs.make_test_rig(2, 8, 6, seed=9)
    path = str(tmp_path / "cloud.ply")
    cloud.save(path)
    back = gs.GaussianCloud.load(path)
    assert len(back) == len(cloud)
    assert np.array_equal(np.asarray(back.positions), np.asarray(cloud.positions))


def test_skinning_transforms_shape():
    _, skeleton, _ = gs.make_test_rig(4, 4, 4, seed=2)
    t = gs.skinning_transforms(skeleton, gs.rest_pose(skeleton))
    assert t.shape == (4, 3, 4)
    assert np.allclose(t[:, :, :3], np.eye(3)[None], atol=0)
    assert np.all(t[:, :, 3] == 0.0)
