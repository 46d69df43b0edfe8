"""
Bundle Adjustment Models
========================

Rotation-only bundle adjustment problem and its result.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.models.geometry import Rotation


class BAProblem(BaseModel):
    """
    Attitudes and unit star directions to refine against ray observations.

    ``observations[s]`` maps frame i -> observed unit ray y_is (camera frame);
    a missing key is eta(i, s) = 0.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    attitudes: Dict[int, Rotation] = Field(..., description="frame -> R_i")
    directions: Dict[int, np.ndarray] = Field(
        default_factory=dict, description="track -> unit X_s (inertial frame)"
    )
    observations: Dict[int, Dict[int, np.ndarray]] = Field(
        ..., description="track -> frame -> unit ray"
    )
    anchor_frame: Optional[int] = Field(None, description="Frame held fixed, None for a free gauge")
    priors: Dict[int, Rotation] = Field(
        default_factory=dict, description="frame -> absolute rotation R~_k from star identification"
    )
    prior_weight: float = Field(0.0, ge=0.0, description="Weight of the absolute-rotation priors")

    @property
    def frames(self) -> List[int]:
        return sorted(self.attitudes)

    @property
    def track_ids(self) -> List[int]:
        return sorted(self.observations)

    def n_observations(self) -> int:
        return sum(len(obs) for obs in self.observations.values())


class BAIteration(BaseModel):
    """One Levenberg-Marquardt step attempt"""
    iter: int
    cost: float
    lam: float = Field(..., alias="lambda")
    accepted: bool

    model_config = ConfigDict(populate_by_name=True)


class BAResult(BaseModel):
    """Refined problem plus the cost report"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    attitudes: Dict[int, Rotation] = Field(...)
    directions: Dict[int, np.ndarray] = Field(...)
    initial_cost: float = Field(..., ge=0.0)
    final_cost: float = Field(..., ge=0.0)
    iterations: int = Field(..., ge=0)
    converged: bool = Field(...)
    stop_reason: str = Field("")
    log: List[BAIteration] = Field(default_factory=list)
    dropped_tracks: List[int] = Field(default_factory=list)
