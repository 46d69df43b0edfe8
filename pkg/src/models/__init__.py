"""
ESTA Data Models
================

Pydantic models for all ESTA data structures.
"""

# Geometry
from src.models.geometry import (
    Rotation,
    Intrinsics,
    IntrinsicsLike,
    intrinsics_matrix,
)

# Catalog
from src.models.catalog import (
    CatalogStar,
    StarCatalog,
)

# Events
from src.models.events import (
    Event,
    EventStream,
    Trajectory,
)

# Frames
from src.models.frames import (
    EventImage,
    PointSet,
)

# Measurements
from src.models.measurements import (
    Correspondence,
    IdentificationResult,
    TriangleHashIndex,
    RelativeRotation,
    StarTrack,
    MeasurementSet,
)

# Bundle adjustment
from src.models.bundle import (
    BAProblem,
    BAIteration,
    BAResult,
)

# Calibration
from src.models.calibration import CalibSolution

# Evaluation
from src.models.evaluation import (
    ErrorStats,
    ErrorBuckets,
    MethodReport,
    RelativeReport,
    EvaluationReport,
)

__all__ = [
    "Rotation",
    "Intrinsics",
    "IntrinsicsLike",
    "intrinsics_matrix",
    "CatalogStar",
    "StarCatalog",
    "Event",
    "EventStream",
    "Trajectory",
    "EventImage",
    "PointSet",
    "Correspondence",
    "IdentificationResult",
    "TriangleHashIndex",
    "RelativeRotation",
    "StarTrack",
    "MeasurementSet",
    "BAProblem",
    "BAIteration",
    "BAResult",
    "CalibSolution",
    "ErrorStats",
    "ErrorBuckets",
    "MethodReport",
    "RelativeReport",
    "EvaluationReport",
]
