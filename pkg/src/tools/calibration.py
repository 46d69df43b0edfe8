"""
Virtual Telescope Calibration
=============================

Linear calibration of the rendering chain x = K_ev H_sc K_te R X:

- ``estimate_homography``: normalized DLT from screen/event pixel pairs
- ``solve_projection``: cross-product DLT for P = K_te R from pixel/direction pairs
- ``factor_projection``: RQ factorization of P into (K_te, R)
- ``calibrate``: the composite K = K_ev H_sc K_te
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.core.exceptions import DegenerateConfigurationError
from src.models import CalibSolution, Intrinsics, IntrinsicsLike, Rotation, intrinsics_matrix

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10


# ==================== NORMALIZATION ====================

def normalization_transform(points: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to the origin with mean distance sqrt(2)"""
    pts = np.asarray(points, dtype=np.float64)
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    if mean_dist < 1e-15:
        raise DegenerateConfigurationError("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def _homogeneous(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return np.column_stack([pts, np.ones(len(pts))])


def _null_vector(A: np.ndarray, n_unknowns: int, what: str) -> np.ndarray:
    _, s, vt = np.linalg.svd(A)
    if A.shape[0] < n_unknowns - 1 or s[n_unknowns - 2] <= RANK_TOLERANCE * s[0]:
        raise DegenerateConfigurationError(f"{what}: design matrix is rank deficient")
    return vt[-1]


# ==================== HOMOGRAPHY ====================

def estimate_homography(src, dst) -> np.ndarray:
    """
    H with dst ~ H src, by normalized DLT; H[2, 2] = 1.

    Args:
        src: (N, 2) points, N >= 4
        dst: (N, 2) points

    Raises:
        ValueError: fewer than 4 pairs
        DegenerateConfigurationError: collinear or coincident points
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("src and dst must have the same length")
    if len(src) < 4:
        raise ValueError(f"homography needs at least 4 pairs, got {len(src)}")
    for side in (src, dst):
        centred = side - side.mean(axis=0)
        sv = np.linalg.svd(centred, compute_uv=False)
        if sv[1] <= RANK_TOLERANCE * max(sv[0], 1e-300):
            raise DegenerateConfigurationError("homography points are collinear")

    T1 = normalization_transform(src)
    T2 = normalization_transform(dst)
    p = _homogeneous(src) @ T1.T
    q = _homogeneous(dst) @ T2.T

    n = len(p)
    A = np.zeros((2 * n, 9))
    A[0::2, 3:6] = -q[:, 2:3] * p
    A[0::2, 6:9] = q[:, 1:2] * p
    A[1::2, 0:3] = q[:, 2:3] * p
    A[1::2, 6:9] = -q[:, 0:1] * p
    h = _null_vector(A, 9, "homography")
    Hn = h.reshape(3, 3)
    H = np.linalg.inv(T2) @ Hn @ T1
    if abs(H[2, 2]) < 1e-15:
        raise DegenerateConfigurationError("homography maps the origin to infinity")
    return H / H[2, 2]


def apply_homography(H: np.ndarray, points) -> np.ndarray:
    q = _homogeneous(np.asarray(points).reshape(-1, 2)) @ np.asarray(H).T
    return q[:, :2] / q[:, 2:3]


# ==================== PROJECTION ====================

def solve_projection(pixels, directions) -> np.ndarray:
    """
    3x3 P with pixel ~ P X, minimizing sum ||x_bar x (P X)||^2.

    P is scaled so that its RQ factor K_te has positive diagonal and unit (3, 3).

    Raises:
        ValueError: fewer than 6 pairs
        DegenerateConfigurationError: directions on a great circle or otherwise rank deficient
    """
    x = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    X = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    if len(x) != len(X):
        raise ValueError("pixels and directions must have the same length")
    if len(x) < 6:
        raise ValueError(f"projection needs at least 6 pairs, got {len(x)}")
    if np.linalg.svd(X, compute_uv=False)[2] <= RANK_TOLERANCE * np.linalg.norm(X):
        raise DegenerateConfigurationError("directions lie on a great circle")

    T = normalization_transform(x)
    p = _homogeneous(x) @ T.T
    n = len(p)
    A = np.zeros((2 * n, 9))
    A[0::2, 3:6] = -p[:, 2:3] * X
    A[0::2, 6:9] = p[:, 1:2] * X
    A[1::2, 0:3] = p[:, 2:3] * X
    A[1::2, 6:9] = -p[:, 0:1] * X
    Pn = _null_vector(A, 9, "projection").reshape(3, 3)
    P = np.linalg.inv(T) @ Pn
    if abs(np.linalg.det(P)) < 1e-15 * np.linalg.norm(P) ** 3:
        raise DegenerateConfigurationError("projection matrix is singular")
    # sign so that det > 0, scale so that K_te[2, 2] = 1
    if np.linalg.det(P) < 0:
        P = -P
    return P / np.linalg.norm(P[2])


def factor_projection(P) -> Tuple[Intrinsics, Rotation]:
    """
    P = s K R with K upper triangular, positive diagonal, K[2, 2] = 1, det R = +1.

    Raises:
        DegenerateConfigurationError: singular P
    """
    P = np.asarray(P, dtype=np.float64)
    if np.linalg.matrix_rank(P) < 3:
        raise DegenerateConfigurationError("projection matrix is singular")
    K, R = linalg.rq(P)
    D = np.diag(np.sign(np.diag(K)))
    K = K @ D
    R = D @ R
    if np.linalg.det(R) < 0:
        R = -R
        K = -K
    K = K / K[2, 2]
    return Intrinsics.from_matrix(K), Rotation(matrix=R)


def reprojection_rms(P, pixels, directions) -> float:
    q = np.asarray(directions, dtype=np.float64).reshape(-1, 3) @ np.asarray(P).T
    proj = q[:, :2] / q[:, 2:3]
    d = proj - np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


# ==================== COMPOSITE ====================

def calibrate(
    screen_points,
    event_points,
    screen_pixels,
    directions,
    K_ev: IntrinsicsLike,
) -> CalibSolution:
    """
    Full calibration.

    Args:
        screen_points, event_points: 2D-2D pairs, screen pixel -> event pixel
        screen_pixels, directions: 2D-3D pairs, screen pixel <- catalog direction
        K_ev: event camera intrinsics

    Returns:
        CalibSolution with H_sc = K_ev^-1 H_pix and K = K_ev H_sc K_te
    """
    Kev = intrinsics_matrix(K_ev)
    H_pix = estimate_homography(screen_points, event_points)
    H_sc = np.linalg.inv(Kev) @ H_pix
    H_sc = H_sc / H_sc[2, 2]

    P = solve_projection(screen_pixels, directions)
    K_te, R = factor_projection(P)

    K = Kev @ H_sc @ K_te.matrix
    K = K / K[2, 2]

    hom_rms = float(
        np.sqrt(np.mean(np.sum((apply_homography(H_pix, screen_points) - np.asarray(event_points)) ** 2, axis=1)))
    )
    proj_rms = reprojection_rms(K_te.matrix @ R.matrix, screen_pixels, directions)
    logger.info(f"📐 Calibration: homography RMS {hom_rms:.3g} px, projection RMS {proj_rms:.3g} px")
    return CalibSolution(
        H_sc=H_sc,
        K_te=K_te,
        R=R,
        K_ev=K_ev if isinstance(K_ev, Intrinsics) else Intrinsics.from_matrix(Kev),
        K=K,
        homography_rms_px=hom_rms,
        projection_rms_px=proj_rms,
    )
