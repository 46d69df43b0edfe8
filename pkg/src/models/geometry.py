"""
Geometry Models
===============

Rotation and camera intrinsics value types.

A ``Rotation`` maps inertial directions into the camera frame:
``x = R @ X``. Its canonical storage is the 3x3 matrix; unit quaternions
(w, x, y, z) with ``w >= 0`` are the serialization format.
"""

from typing import Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.transform import Rotation as _ScipyRotation

from src.core.exceptions import InvalidAxisError, InvalidIntrinsicsError, InvalidRotationError

ORTHONORMALITY_TOLERANCE = 1e-6
"""Largest ||R^T R - I||_F accepted (and re-projected) on construction"""

REPROJECT_THRESHOLD = 1e-12


def project_to_so3(M) -> np.ndarray:
    """Closest rotation in Frobenius norm, vectorized over leading axes"""
    u, _, vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    d = np.sign(np.linalg.det(u @ vt))
    u[..., :, 2] *= np.asarray(d)[..., None]
    return u @ vt


def _validated_matrix(v) -> np.ndarray:
    """Accept near-orthonormal input and snap it onto SO(3)"""
    m = np.array(v, dtype=np.float64)
    if m.shape != (3, 3):
        raise InvalidRotationError(f"rotation matrix must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidRotationError("rotation matrix has non-finite entries")
    err = np.linalg.norm(m.T @ m - np.eye(3))
    if err > ORTHONORMALITY_TOLERANCE:
        raise InvalidRotationError(f"matrix is not orthonormal (||R^T R - I||_F = {err:.3g})")
    if np.linalg.det(m) < 0.0:
        raise InvalidRotationError("matrix is a reflection (det < 0)")
    if err > REPROJECT_THRESHOLD:
        m = project_to_so3(m)
    m.setflags(write=False)
    return m


class Rotation(BaseModel):
    """Element of SO(3), immutable"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray = Field(..., description="3x3 rotation matrix")

    def __init__(self, matrix, **data):
        super().__init__(matrix=_validated_matrix(matrix), **data)

    # ============ CONSTRUCTORS ============

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(matrix=np.eye(3))

    @classmethod
    def from_matrix(cls, matrix) -> "Rotation":
        return cls(matrix=matrix)

    @classmethod
    def from_quaternion(cls, q: Sequence[float]) -> "Rotation":
        """Build from a quaternion (w, x, y, z); normalized on input"""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (4,) or not np.all(np.isfinite(q)) or np.linalg.norm(q) == 0.0:
            raise InvalidRotationError(f"invalid quaternion {q!r}")
        w, x, y, z = q
        return cls(matrix=_ScipyRotation.from_quat([x, y, z, w]).as_matrix())

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> "Rotation":
        """Rodrigues rotation by ``angle`` radians about ``axis`` (normalized)"""
        a = np.asarray(axis, dtype=np.float64)
        n = np.linalg.norm(a)
        if a.shape != (3,) or not np.isfinite(n) or n == 0.0:
            raise InvalidAxisError(f"rotation axis must be a non-zero 3-vector, got {axis!r}")
        if angle == 0.0:
            return cls.identity()
        return cls(matrix=_ScipyRotation.from_rotvec(a / n * float(angle)).as_matrix())

    @classmethod
    def from_rotvec(cls, rotvec: Sequence[float]) -> "Rotation":
        return cls(matrix=_ScipyRotation.from_rotvec(np.asarray(rotvec, dtype=np.float64)).as_matrix())

    # ============ CONVERSIONS ============

    def as_quaternion(self) -> np.ndarray:
        """Unit quaternion (w, x, y, z) with w >= 0"""
        x, y, z, w = _ScipyRotation.from_matrix(self.matrix).as_quat()
        q = np.array([w, x, y, z])
        if q[0] < 0.0:
            q = -q
        return q

    def as_rotvec(self) -> np.ndarray:
        return _ScipyRotation.from_matrix(self.matrix).as_rotvec()

    # ============ ALGEBRA ============

    def inverse(self) -> "Rotation":
        return Rotation(matrix=self.matrix.T)

    def apply(self, vectors) -> np.ndarray:
        """Rotate one (3,) vector or an (N, 3) array of row vectors"""
        v = np.asarray(vectors, dtype=np.float64)
        return v @ self.matrix.T

    def __matmul__(self, other: "Rotation") -> "Rotation":
        if not isinstance(other, Rotation):
            return NotImplemented
        return Rotation(matrix=self.matrix @ other.matrix)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rotation):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())

    def __repr__(self) -> str:
        q = self.as_quaternion()
        return f"Rotation(q=[{q[0]:.6f}, {q[1]:.6f}, {q[2]:.6f}, {q[3]:.6f}])"


class Intrinsics(BaseModel):
    """Pinhole camera intrinsics K"""
    model_config = ConfigDict(frozen=True)

    fx: float = Field(..., description="Focal length x (pixels)")
    fy: float = Field(..., description="Focal length y (pixels)")
    cx: float = Field(..., description="Principal point x (pixels)")
    cy: float = Field(..., description="Principal point y (pixels)")
    skew: float = Field(0.0, description="Skew (pixels)")

    def __init__(self, **data):
        super().__init__(**data)
        values = (self.fx, self.fy, self.cx, self.cy, self.skew)
        if not all(np.isfinite(values)):
            raise InvalidIntrinsicsError(f"non-finite intrinsics {values}")
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise InvalidIntrinsicsError(
                f"focal lengths must be positive (fx={self.fx}, fy={self.fy})"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, self.skew, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    @classmethod
    def from_matrix(cls, K) -> "Intrinsics":
        """Upper-triangular K normalized so K[2, 2] = 1"""
        K = np.asarray(K, dtype=np.float64)
        if K.shape != (3, 3) or K[2, 2] == 0.0:
            raise InvalidIntrinsicsError(f"cannot read intrinsics from {K!r}")
        K = K / K[2, 2]
        if abs(K[1, 0]) > 1e-9 or abs(K[2, 0]) > 1e-9 or abs(K[2, 1]) > 1e-9:
            raise InvalidIntrinsicsError("intrinsics matrix must be upper-triangular")
        return cls(fx=K[0, 0], fy=K[1, 1], cx=K[0, 2], cy=K[1, 2], skew=K[0, 1])

    @classmethod
    def from_fov(cls, width: int, height: int, fov_deg: float) -> "Intrinsics":
        """Square pixels, horizontal field of view, principal point at the sensor centre"""
        f = (width / 2.0) / np.tan(np.radians(fov_deg) / 2.0)
        return cls(fx=f, fy=f, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)


IntrinsicsLike = Union[Intrinsics, np.ndarray]
"""Functions that project or backproject also accept a general 3x3 matrix"""


def intrinsics_matrix(K: IntrinsicsLike) -> np.ndarray:
    """3x3 matrix of an Intrinsics or array; raises if K is singular"""
    M = K.matrix if isinstance(K, Intrinsics) else np.asarray(K, dtype=np.float64)
    if M.shape != (3, 3) or not np.all(np.isfinite(M)):
        raise InvalidIntrinsicsError(f"intrinsics must be a finite 3x3 matrix, got shape {M.shape}")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise InvalidIntrinsicsError("intrinsics matrix is singular")
    return M
