"""
Measurement Models
==================

Everything the measurement-extraction stages produce: star correspondences,
the triangle hash index, relative rotations, star tracks, and the
``MeasurementSet`` consumed by rotation averaging.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.geometry import Rotation


# ==================== STAR IDENTIFICATION ====================

class Correspondence(BaseModel):
    """Image point matched to a catalog star"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    point_index: int = Field(..., ge=0, description="Row in the frame's PointSet")
    point: np.ndarray = Field(..., description="(x, y) pixels")
    ray: np.ndarray = Field(..., description="Backprojected unit ray (camera frame)")
    star_id: int = Field(..., description="Catalog id")
    direction: np.ndarray = Field(..., description="Catalog unit direction (inertial frame)")


class IdentificationResult(BaseModel):
    """Outcome of identifying one frame"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    frame: int = Field(..., ge=0)
    n_points: int = Field(..., ge=0)
    status: str = Field(..., description="identified | failed | skipped")
    correspondences: List[Correspondence] = Field(default_factory=list)
    rotation: Optional[Rotation] = Field(None, description="Absolute rotation when identified")
    false_match_probability: Optional[float] = Field(None)
    hypotheses_tried: int = Field(0, ge=0)
    reason: str = Field("", description="Why the frame failed or was skipped")

    @property
    def n_matched(self) -> int:
        return len(self.correspondences)


class TriangleHashIndex(BaseModel):
    """
    Quantized-triangle index over catalog star triples.

    Triples are stored once, with vertices labelled by the length of the
    opposite side (shortest first). ``keys`` is sorted and row-aligned with
    ``triples`` and ``sides`` so a bucket is a contiguous slice.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    fov_deg: float = Field(..., gt=0.0, description="Largest pairwise separation indexed")
    quantization_deg: float = Field(..., gt=0.0, description="Bin width q")
    mag_limit: float = Field(..., description="Faintest indexed magnitude")
    stars_per_cone: int = Field(..., ge=3)
    n_bins: int = Field(..., gt=0, description="Bins per side (key = b0 * n_bins + b1)")
    keys: np.ndarray = Field(..., description="(T,) sorted int64 keys")
    triples: np.ndarray = Field(..., description="(T, 3) catalog ids, labelled vertices")
    sides: np.ndarray = Field(..., description="(T, 3) sorted side lengths (deg)")
    pattern_ids: np.ndarray = Field(..., description="Catalog ids that survived thinning")

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    def key_of(self, s0: float, s1: float) -> int:
        q = self.quantization_deg
        return int(np.floor(s0 / q)) * self.n_bins + int(np.floor(s1 / q))

    def bucket(self, key: int) -> slice:
        lo = int(np.searchsorted(self.keys, key, side="left"))
        hi = int(np.searchsorted(self.keys, key, side="right"))
        return slice(lo, hi)

    def lookup(self, key: int) -> List[Tuple[int, int, int]]:
        """Catalog-id triples stored under ``key``"""
        rows = self.triples[self.bucket(key)]
        return [tuple(int(v) for v in r) for r in rows]

    def distinct_keys(self) -> int:
        return int(np.unique(self.keys).shape[0])


# ==================== REGISTRATION ====================

class RelativeRotation(BaseModel):
    """R_ji mapping frame-i rays to frame-j rays (j < i)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    j: int = Field(..., ge=0, description="Earlier frame (target)")
    i: int = Field(..., ge=0, description="Later frame (source)")
    rotation: Rotation = Field(...)
    residual: float = Field(..., ge=0.0, description="Trimmed sum of squared chordal residuals")
    rms_residual: float = Field(0.0, ge=0.0, description="Trimmed RMS residual (rad)")
    inliers: List[Tuple[int, int]] = Field(
        default_factory=list, description="Kept (source index in i, target index in j) pairs"
    )
    iterations: int = Field(0, ge=0)
    objective_history: List[float] = Field(default_factory=list)

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.j, self.i)


class StarTrack(BaseModel):
    """One star observed across frames (at most one point per frame)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    track_id: int = Field(..., ge=0)
    observations: Dict[int, int] = Field(
        ..., description="frame -> point index within that frame's PointSet"
    )

    @field_validator("observations")
    @classmethod
    def validate_length(cls, v: Dict[int, int]) -> Dict[int, int]:
        if len(v) < 2:
            raise ValueError("a track needs observations in at least two frames")
        return dict(sorted(v.items()))

    @property
    def frames(self) -> List[int]:
        return list(self.observations)

    def __len__(self) -> int:
        return len(self.observations)


# ==================== AVERAGING INPUT ====================

class MeasurementSet(BaseModel):
    """Relative rotations on graph N plus absolute rotations on index set A"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_frames: int = Field(..., ge=0, description="M")
    relative: Dict[Tuple[int, int], Rotation] = Field(
        default_factory=dict, description="(j, i) -> R_ji with j < i"
    )
    absolute: Dict[int, Rotation] = Field(default_factory=dict, description="k -> R_k")
    alpha: float = Field(1.0, gt=0.0, description="Weight of absolute rotations")

    @field_validator("relative")
    @classmethod
    def validate_edges(cls, v: Dict[Tuple[int, int], Rotation]) -> Dict[Tuple[int, int], Rotation]:
        for (j, i) in v:
            if not j < i:
                raise ValueError(f"relative edge ({j}, {i}) must satisfy j < i")
        return v

    def model_post_init(self, __context) -> None:
        for (j, i) in self.relative:
            if i >= self.n_frames:
                raise ValueError(f"relative edge ({j}, {i}) exceeds n_frames={self.n_frames}")
        for k in self.absolute:
            if not 0 <= k < self.n_frames:
                raise ValueError(f"absolute rotation for frame {k} exceeds n_frames={self.n_frames}")

    @classmethod
    def from_estimates(
        cls,
        n_frames: int,
        relative: List[RelativeRotation],
        absolute: Dict[int, Rotation],
        alpha: float = 1.0,
    ) -> "MeasurementSet":
        return cls(
            n_frames=n_frames,
            relative={r.pair: r.rotation for r in relative},
            absolute=dict(absolute),
            alpha=alpha,
        )
