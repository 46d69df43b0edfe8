"""
Geometry Tests
==============

Rotation model, SO(3) helpers, projection and the angular error metric.
"""

import numpy as np
import pytest

from src.core.exceptions import InvalidAxisError, InvalidIntrinsicsError, InvalidRotationError
from src.models import Intrinsics, Rotation
from src.tools.geometry import (
    angle_between,
    angular_error,
    angular_errors,
    backproject,
    backproject_many,
    chordal_distance,
    exp_so3,
    hat,
    log_so3,
    project,
    project_many,
    project_to_so3,
    relative_rotation,
    rotation_from_axis_angle,
    rotation_to_euler,
)
from tests.conftest import random_rotation, random_unit_vectors


# ==================== ROTATION MODEL ====================

def test_rotation_is_orthonormal_with_unit_determinant(rng):
    for _ in range(20):
        R = random_rotation(rng).matrix
        assert np.linalg.norm(R.T @ R - np.eye(3)) <= 1e-9
        assert abs(np.linalg.det(R) - 1.0) <= 1e-9


def test_rotation_rejects_non_orthonormal_and_reflection():
    with pytest.raises(InvalidRotationError):
        Rotation(matrix=np.diag([1.0, 1.0, 1.1]))
    with pytest.raises(InvalidRotationError):
        Rotation(matrix=np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(InvalidRotationError):
        Rotation(matrix=np.eye(2))


def test_rotation_snaps_nearly_orthonormal_input(rng):
    R = random_rotation(rng).matrix + 1e-8 * rng.normal(size=(3, 3))
    snapped = Rotation(matrix=R).matrix
    assert np.linalg.norm(snapped.T @ snapped - np.eye(3)) <= 1e-12


def test_quaternion_is_canonical_and_round_trips(rng):
    R = random_rotation(rng)
    q = R.as_quaternion()
    assert q[0] >= 0.0
    assert np.isclose(np.linalg.norm(q), 1.0)
    assert angular_error(Rotation.from_quaternion(-q), R) < 1e-9


def test_zero_axis_is_rejected():
    with pytest.raises(InvalidAxisError):
        rotation_from_axis_angle([0.0, 0.0, 0.0], 0.1)


def test_zero_angle_gives_identity():
    assert rotation_from_axis_angle([1.0, 2.0, 3.0], 0.0) == Rotation.identity()


def test_composition_and_inverse(rng):
    A, B = random_rotation(rng), random_rotation(rng)
    assert np.allclose((A @ B).matrix, A.matrix @ B.matrix)
    assert angular_error(A @ A.inverse(), Rotation.identity()) < 1e-9


# ==================== SO(3) HELPERS ====================

def test_hat_matches_cross_product(rng):
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(hat(a) @ b, np.cross(a, b))


def test_exp_log_inverse(rng):
    w = rng.normal(size=(10, 3))
    w *= (np.pi * 0.9 / np.linalg.norm(w, axis=1, keepdims=True)) * rng.uniform(0, 1, size=(10, 1))
    assert np.allclose(log_so3(exp_so3(w)), w, atol=1e-9)


def test_project_to_so3_is_closest_rotation(rng):
    R = random_rotation(rng).matrix
    assert np.allclose(project_to_so3(3.0 * R), R)


def test_project_to_so3_handles_stacks(rng):
    stack = np.array([random_rotation(rng).matrix for _ in range(4)])
    noisy = stack + rng.normal(scale=1e-3, size=stack.shape)
    projected = project_to_so3(noisy)
    assert projected.shape == (4, 3, 3)
    for k in range(4):
        assert np.allclose(projected[k], project_to_so3(noisy[k]))
        assert np.linalg.det(projected[k]) == pytest.approx(1.0)


def test_relative_rotation_convention(rng):
    Rj, Ri = random_rotation(rng), random_rotation(rng)
    Rji = relative_rotation(Rj, Ri)
    assert angular_error(Rji @ Ri, Rj) < 1e-9


def test_euler_angles_of_a_pure_yaw():
    R = Rotation.from_axis_angle([0.0, 0.0, 1.0], np.radians(30.0))
    assert np.allclose(rotation_to_euler(R), [30.0, 0.0, 0.0], atol=1e-9)


# ==================== ANGULAR ERROR ====================

def test_angular_error_equals_rotation_angle(rng):
    R = random_rotation(rng)
    for deg in (0.0, 0.5, 2.0, 45.0, 179.0):
        E = Rotation.from_axis_angle(rng.normal(size=3), np.radians(deg))
        assert angular_error(E @ R, R) == pytest.approx(deg, abs=1e-6)


def test_angular_error_is_symmetric_and_bounded(rng):
    A = np.array([random_rotation(rng).matrix for _ in range(50)])
    B = np.array([random_rotation(rng).matrix for _ in range(50)])
    e = angular_errors(A, B)
    assert np.allclose(e, angular_errors(B, A))
    assert np.all((e >= 0.0) & (e <= 180.0))


def test_chordal_distance_of_half_turn():
    R = Rotation.from_axis_angle([1.0, 0.0, 0.0], np.pi)
    assert chordal_distance(R, Rotation.identity()) == pytest.approx(2.0 * np.sqrt(2.0))
    assert angular_error(R, Rotation.identity()) == pytest.approx(180.0)


def test_angle_between_small_and_antipodal():
    u = np.array([0.0, 0.0, 1.0])
    v = np.array([np.sin(1e-9), 0.0, np.cos(1e-9)])
    assert angle_between(u, v) == pytest.approx(1e-9, rel=1e-6)
    assert angle_between(u, -u) == pytest.approx(np.pi)


# ==================== CAMERA ====================

def test_intrinsics_validation():
    with pytest.raises(InvalidIntrinsicsError):
        Intrinsics(fx=0.0, fy=100.0, cx=0.0, cy=0.0)
    with pytest.raises(InvalidIntrinsicsError):
        Intrinsics(fx=100.0, fy=-1.0, cx=0.0, cy=0.0)


def test_principal_point_backprojects_to_optical_axis(intrinsics):
    ray = backproject([intrinsics.cx, intrinsics.cy], intrinsics)
    assert np.allclose(ray, [0.0, 0.0, 1.0])


def test_backprojected_rays_are_unit(intrinsics, rng):
    pts = rng.uniform([0, 0], [240, 180], size=(100, 2))
    rays = backproject_many(pts, intrinsics)
    assert np.allclose(np.linalg.norm(rays, axis=1), 1.0, atol=1e-12)


def test_project_backproject_round_trip(intrinsics, rng):
    R = random_rotation(rng)
    pts = rng.uniform([0, 0], [240, 180], size=(50, 2))
    X = R.inverse().apply(backproject_many(pts, intrinsics))
    pixels, in_front = project_many(intrinsics, R, X)
    assert in_front.all()
    assert np.allclose(pixels, pts, atol=1e-9)


def test_direction_behind_camera_is_flagged(intrinsics):
    result = project(intrinsics, Rotation.identity(), [0.0, 0.0, -1.0])
    assert result.behind
    assert result.pixel is None


def test_projection_of_many_directions_marks_the_back_hemisphere(intrinsics, rng):
    X = random_unit_vectors(rng, 200)
    pixels, in_front = project_many(intrinsics, Rotation.identity(), X)
    assert np.array_equal(in_front, X[:, 2] > 0)
    assert np.isnan(pixels[~in_front]).all()
