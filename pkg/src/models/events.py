"""
Event Models
============

Asynchronous sensor events, event streams and ground-truth trajectories.
"""

from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.geometry import Rotation


class Event(BaseModel):
    """One sensor event"""
    model_config = ConfigDict(frozen=True)

    t: int = Field(..., ge=0, description="Microseconds since stream start")
    x: int = Field(..., ge=0, description="Column (pixels)")
    y: int = Field(..., ge=0, description="Row (pixels)")
    polarity: int = Field(..., description="1 for +, 0 for -")

    @field_validator("polarity")
    @classmethod
    def validate_polarity(cls, v: int) -> int:
        if v not in (0, 1):
            raise ValueError(f"polarity must be 0 or 1, got {v}")
        return v


class EventStream(BaseModel):
    """
    Column-oriented event stream.

    Invariants: all arrays share one length, ``t`` is non-decreasing and every
    coordinate lies inside the sensor.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    width: int = Field(..., gt=0, description="Sensor width (pixels)")
    height: int = Field(..., gt=0, description="Sensor height (pixels)")
    t: np.ndarray = Field(..., description="int64 timestamps (us)")
    x: np.ndarray = Field(..., description="int32 columns")
    y: np.ndarray = Field(..., description="int32 rows")
    p: np.ndarray = Field(..., description="int8 polarities (1 = +)")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Source counts, warnings")

    @field_validator("t", "x", "y", "p", mode="before")
    @classmethod
    def as_array(cls, v) -> np.ndarray:
        return np.asarray(v).reshape(-1)

    def model_post_init(self, __context) -> None:
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event arrays must share one length")
        self.t = self.t.astype(np.int64, copy=False)
        self.x = self.x.astype(np.int32, copy=False)
        self.y = self.y.astype(np.int32, copy=False)
        self.p = self.p.astype(np.int8, copy=False)
        if n:
            if np.any(np.diff(self.t) < 0):
                raise ValueError("event timestamps must be non-decreasing")
            if (self.x.min() < 0 or self.x.max() >= self.width
                    or self.y.min() < 0 or self.y.max() >= self.height):
                raise ValueError("event coordinates fall outside the sensor")

    @classmethod
    def empty(cls, width: int, height: int) -> "EventStream":
        z = np.zeros(0, dtype=np.int64)
        return cls(width=width, height=height, t=z, x=z, y=z, p=z)

    def __len__(self) -> int:
        return int(len(self.t))

    def event(self, k: int) -> Event:
        return Event(t=int(self.t[k]), x=int(self.x[k]), y=int(self.y[k]), polarity=int(self.p[k]))


class Trajectory(BaseModel):
    """Ground-truth attitudes plus the constant-rate parameterization"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: List[float] = Field(default_factory=list, description="Sample times (s)")
    rotations: List[Rotation] = Field(default_factory=list, description="R*(t) per sample")
    initial_attitude: Rotation = Field(..., description="R*(0)")
    axis: List[float] = Field(..., description="Unit rotation axis (camera frame)")
    angular_speed_dps: float = Field(..., description="Angular speed (deg/s)")

    def at(self, t: float) -> Rotation:
        """Attitude at an arbitrary time from the closed-form model"""
        angle = np.radians(self.angular_speed_dps) * float(t)
        return Rotation.from_axis_angle(self.axis, angle) @ self.initial_attitude
