"""
Frame Models
============

Event images (counts over one time window) and the point sets extracted
from their mean-filtered versions.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class EventImage(BaseModel):
    """Per-pixel counts of distinct event timestamps within [t_start, t_end)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int = Field(..., ge=0, description="Frame index (0-based)")
    t_start: int = Field(..., description="Window start (us, inclusive)")
    t_end: int = Field(..., description="Window end (us, exclusive)")
    counts: np.ndarray = Field(..., description="(height, width) uint16 counts")

    @property
    def width(self) -> int:
        return int(self.counts.shape[1])

    @property
    def height(self) -> int:
        return int(self.counts.shape[0])

    @property
    def t_mid(self) -> float:
        """Window midpoint in seconds"""
        return 0.5 * (self.t_start + self.t_end) * 1e-6


class PointSet(BaseModel):
    """
    Discrete points of one frame.

    ``points`` are (x, y) pixel coordinates (x = column), sorted by decreasing
    intensity then y then x; ``rays`` are the backprojected unit rays in the
    same order.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    frame: int = Field(..., ge=0, description="Frame index")
    points: np.ndarray = Field(..., description="(N, 2) pixel coordinates")
    intensities: np.ndarray = Field(..., description="(N,) summed filtered intensity")
    rays: np.ndarray = Field(..., description="(N, 3) unit rays")
    width: Optional[int] = Field(None, description="Sensor width")
    height: Optional[int] = Field(None, description="Sensor height")

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @classmethod
    def empty(cls, frame: int, width: Optional[int] = None, height: Optional[int] = None) -> "PointSet":
        return cls(
            frame=frame,
            points=np.zeros((0, 2)),
            intensities=np.zeros(0),
            rays=np.zeros((0, 3)),
            width=width,
            height=height,
        )
