"""
Calibration Models
==================

Virtual-telescope calibration result: the chain x = K_ev H_sc K_te R X.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.models.geometry import Intrinsics, Rotation


class CalibSolution(BaseModel):
    """Calibrated components and their composite"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    H_sc: np.ndarray = Field(..., description="Screen pixels -> normalized event plane, H[2,2] = 1")
    K_te: Intrinsics = Field(..., description="Virtual telescope intrinsics")
    R: Rotation = Field(..., description="Telescope attitude")
    K_ev: Intrinsics = Field(..., description="Event camera intrinsics (input)")
    K: np.ndarray = Field(..., description="Composite K_ev H_sc K_te, K[2,2] = 1")
    homography_rms_px: float = Field(0.0, ge=0.0, description="Homography transfer RMS")
    projection_rms_px: float = Field(0.0, ge=0.0, description="Projection reprojection RMS")
