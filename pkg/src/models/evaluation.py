"""
Evaluation Models
=================

Per-sequence accuracy report.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ErrorStats(BaseModel):
    """Summary of an angular-error series (degrees)"""
    count: int = Field(..., ge=0)
    rmse: float = Field(..., ge=0.0, description="sqrt(mean(e^2))")
    sd: float = Field(..., ge=0.0, description="Population standard deviation")
    mean: float = Field(..., ge=0.0)
    max: float = Field(..., ge=0.0)


class ErrorBuckets(BaseModel):
    """Histogram of absolute-rotation errors"""
    below_1deg: int = Field(0, ge=0, description="e < 1")
    below_10deg: int = Field(0, ge=0, description="1 <= e < 10")
    above_10deg: int = Field(0, ge=0, description="e >= 10")


class MethodReport(BaseModel):
    """Errors of one attitude estimate against ground truth"""
    per_frame: Dict[int, float] = Field(default_factory=dict)
    stats: ErrorStats
    aligned_stats: Optional[ErrorStats] = Field(
        None, description="Errors after removing the best global rotation"
    )


class RelativeReport(BaseModel):
    """Errors of relative rotations against R*_j (R*_i)^T"""
    per_pair: Dict[str, float] = Field(default_factory=dict, description="\"j,i\" -> error")
    stats: ErrorStats


class EvaluationReport(BaseModel):
    """Everything ``esta evaluate`` emits in report.json"""
    n_frames: int = Field(..., ge=0)
    methods: Dict[str, MethodReport] = Field(default_factory=dict)
    absolute: Optional[MethodReport] = Field(None, description="Identified-frame rotations")
    absolute_buckets: Optional[ErrorBuckets] = Field(None)
    relative: Optional[RelativeReport] = Field(None)
    runtimes: Optional[Dict[str, float]] = Field(None)
    missing_methods: List[str] = Field(default_factory=list)
