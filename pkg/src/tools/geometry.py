"""
Geometry Core
=============

Rotation algebra, ray backprojection, pinhole projection and the angular
error metric. Functions accept ``Rotation`` objects or raw 3x3 arrays;
vectorized ``*_many`` variants work on stacked arrays.

Conventions:
- camera ray = R @ inertial direction
- pixel (x, y): x to the right, y down, origin at the top-left pixel centre
"""

from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation as _ScipyRotation

from src.models.geometry import IntrinsicsLike, Rotation, intrinsics_matrix
from src.models.geometry import project_to_so3 as project_to_so3

RotationLike = Union[Rotation, np.ndarray]

_SQRT8 = 2.0 * np.sqrt(2.0)


def as_matrix(R: RotationLike) -> np.ndarray:
    return R.matrix if isinstance(R, Rotation) else np.asarray(R, dtype=np.float64)


# ==================== SO(3) ====================

def hat(v) -> np.ndarray:
    """Skew-symmetric matrix with hat(a) @ b = a x b"""
    x, y, z = np.asarray(v, dtype=np.float64)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def hat_many(v: np.ndarray) -> np.ndarray:
    """(N, 3) -> (N, 3, 3)"""
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def exp_so3(w) -> np.ndarray:
    """Rotation matrix of a rotation vector; accepts (3,) or (N, 3)"""
    return _ScipyRotation.from_rotvec(np.asarray(w, dtype=np.float64)).as_matrix()


def log_so3(R) -> np.ndarray:
    """Rotation vector of a matrix; accepts (3, 3) or (N, 3, 3)"""
    return _ScipyRotation.from_matrix(as_matrix(R)).as_rotvec()


def rotation_from_axis_angle(axis: Sequence[float], angle: float) -> Rotation:
    """Rotation by ``angle`` radians about ``axis``; zero axis raises InvalidAxisError"""
    return Rotation.from_axis_angle(axis, angle)


def relative_rotation(R_j: RotationLike, R_i: RotationLike) -> Rotation:
    """R_ji = R_j R_i^T, mapping frame-i rays to frame-j rays"""
    return Rotation(matrix=as_matrix(R_j) @ as_matrix(R_i).T)


def rotation_to_euler(R: RotationLike) -> np.ndarray:
    """(yaw, pitch, roll) in degrees, intrinsic Z-Y-X"""
    return _ScipyRotation.from_matrix(as_matrix(R)).as_euler("ZYX", degrees=True)


# ==================== METRICS ====================

def chordal_distance(R1: RotationLike, R2: RotationLike) -> float:
    return float(np.linalg.norm(as_matrix(R1) - as_matrix(R2)))


def angular_error(R1: RotationLike, R2: RotationLike) -> float:
    """2 arcsin(||R1 - R2||_F / (2 sqrt 2)) in degrees, in [0, 180]"""
    s = chordal_distance(R1, R2) / _SQRT8
    return float(np.degrees(2.0 * np.arcsin(np.clip(s, -1.0, 1.0))))


def angular_errors(R1: np.ndarray, R2: np.ndarray) -> np.ndarray:
    """Angular error of stacked (N, 3, 3) rotations, degrees"""
    d = np.linalg.norm(np.asarray(R1) - np.asarray(R2), axis=(-2, -1)) / _SQRT8
    return np.degrees(2.0 * np.arcsin(np.clip(d, -1.0, 1.0)))


def angle_between(u, v) -> np.ndarray:
    """Angle between unit vectors (rad), stable for tiny and near-pi angles"""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)


# ==================== CAMERA ====================

class Projection(NamedTuple):
    pixel: Optional[np.ndarray]
    behind: bool


def backproject(pixel: Sequence[float], K: IntrinsicsLike) -> np.ndarray:
    """Unit ray K^-1 [x, y, 1]^T / ||.||"""
    return backproject_many(np.asarray(pixel, dtype=np.float64).reshape(1, 2), K)[0]


def backproject_many(points: np.ndarray, K: IntrinsicsLike) -> np.ndarray:
    """(N, 2) pixels -> (N, 3) unit rays"""
    M = intrinsics_matrix(K)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    homog = np.column_stack([pts, np.ones(len(pts))])
    rays = np.linalg.solve(M, homog.T).T
    return rays / np.linalg.norm(rays, axis=1, keepdims=True)


def project(K: IntrinsicsLike, R: RotationLike, X: Sequence[float]) -> Projection:
    """Pixel of direction X, or ``behind=True`` when (R X)_z <= 0"""
    pixels, in_front = project_many(K, R, np.asarray(X, dtype=np.float64).reshape(1, 3))
    if not in_front[0]:
        return Projection(pixel=None, behind=True)
    return Projection(pixel=pixels[0], behind=False)


def project_many(K: IntrinsicsLike, R: RotationLike, X: np.ndarray):
    """
    Project (N, 3) inertial directions.

    Returns:
        (pixels (N, 2), in_front (N,) bool); pixels of rays behind the camera are NaN
    """
    M = intrinsics_matrix(K)
    cam = np.asarray(X, dtype=np.float64).reshape(-1, 3) @ as_matrix(R).T
    in_front = cam[:, 2] > 0.0
    homog = cam @ M.T
    pixels = np.full((len(cam), 2), np.nan)
    pixels[in_front] = homog[in_front, :2] / homog[in_front, 2:3]
    return pixels, in_front


def in_sensor(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Pixels whose nearest pixel centre lies on the sensor"""
    x = pixels[:, 0]
    y = pixels[:, 1]
    with np.errstate(invalid="ignore"):
        return (x > -0.5) & (x < width - 0.5) & (y > -0.5) & (y < height - 0.5)


def field_of_view_radius(K: IntrinsicsLike, width: int, height: int) -> float:
    """Largest angle (rad) between the optical axis and a sensor corner ray"""
    corners = np.array([[-0.5, -0.5], [width - 0.5, -0.5], [-0.5, height - 0.5], [width - 0.5, height - 0.5]])
    rays = backproject_many(corners, K)
    return float(np.max(angle_between(rays, np.array([0.0, 0.0, 1.0]))))


def field_of_view_diagonal(K: IntrinsicsLike, width: int, height: int) -> float:
    """Largest angle (rad) between two sensor corner rays"""
    corners = np.array([[-0.5, -0.5], [width - 0.5, -0.5], [-0.5, height - 0.5], [width - 0.5, height - 0.5]])
    rays = backproject_many(corners, K)
    return float(max(angle_between(rays[0], rays[3]), angle_between(rays[1], rays[2])))


def boresight(R: RotationLike) -> np.ndarray:
    """Inertial direction of the optical axis (R^T e_z)"""
    return as_matrix(R)[2, :].copy()
