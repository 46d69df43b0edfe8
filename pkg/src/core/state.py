"""
ESTA State Schema
=================

LangGraph state definition for the tracking pipeline.
This is the data structure that flows through all graph nodes.
"""

from datetime import datetime, timezone
from typing import Annotated, Any, Dict, List, Optional, Tuple
from typing import TypedDict
import operator

from src.core.config import EstaConfig

from src.models import (
    BAIteration,
    EventImage,
    EventStream,
    IdentificationResult,
    Intrinsics,
    PointSet,
    RelativeRotation,
    Rotation,
    StarCatalog,
    StarTrack,
)


class TrackingState(TypedDict):
    """
    Main LangGraph state for the tracking pipeline

    Each node reads its inputs from here and returns only the keys it
    produced. ``decision_log`` and ``warnings`` accumulate across nodes;
    ``stage_runtimes`` merges per-node timings.
    """

    # ============ INPUTS ============
    config: EstaConfig
    """Effective configuration of the run"""

    events: EventStream
    """Input event stream"""

    catalog: StarCatalog
    """Inertial star catalog"""

    intrinsics: Intrinsics
    """Event camera intrinsics"""

    # ============ FRAMES ============
    images: List[EventImage]
    """Event images, one per integration window"""

    point_sets: List[PointSet]
    """Points extracted from every image (index = frame)"""

    apc_values: List[int]
    """Active pixel count per frame"""

    selected_frames: List[int]
    """Frames whose APC reached eps2"""

    # ============ STAR IDENTIFICATION ============
    identification: Dict[int, IdentificationResult]
    """Identification outcome per selected frame"""

    absolute_rotations: Dict[int, Rotation]
    """Absolute rotations of identified frames (index set A)"""

    # ============ REGISTRATION ============
    relative_rotations: List[RelativeRotation]
    """Accepted trimmed-ICP results (graph N)"""

    tracks: List[StarTrack]
    """Star tracks from consecutive-frame associations"""

    # ============ OPTIMISATION ============
    attitudes_chained: Dict[int, Rotation]
    attitudes_averaged: Dict[int, Rotation]
    attitudes_bundle: Dict[int, Rotation]

    star_directions: Dict[int, Any]
    """Refined unit star direction per track"""

    averaging_log: List[Dict[str, float]]
    """Convergence log {iter, objective, max_update}"""

    bundle_log: List[BAIteration]
    """Levenberg-Marquardt step log"""

    gauge_free: bool
    """True when no absolute rotation anchored the attitudes"""

    # ============ AUDIT & RUNTIME ============
    stage_runtimes: Annotated[Dict[str, float], operator.or_]
    """Wall-clock seconds per node"""

    decision_reasoning: str
    """Markdown summary written by the last node"""

    decision_log: Annotated[List[Dict], operator.add]
    """
    Audit trail of all decisions made
    Each entry: {timestamp, node, decision_type, reasoning, data}
    """

    warnings: Annotated[List[str], operator.add]
    """Non-fatal conditions (dropped frames, partial averaging, ...)"""

    # ============ ERROR HANDLING ============
    error: Optional[str]
    """Error message if a stage failed"""

    failed_stage: Optional[str]
    """Node that set ``error``"""


# ==================== STATE INITIALIZATION ====================

def create_initial_state(
    events: EventStream,
    catalog: StarCatalog,
    intrinsics: Intrinsics,
    config: Optional[EstaConfig] = None,
) -> TrackingState:
    """
    Create the state a tracking run starts from

    Returns:
        TrackingState with inputs set and every product empty
    """
    return TrackingState(
        config=config or EstaConfig(),
        events=events,
        catalog=catalog,
        intrinsics=intrinsics,

        # Frames
        images=[],
        point_sets=[],
        apc_values=[],
        selected_frames=[],

        # Star identification
        identification={},
        absolute_rotations={},

        # Registration
        relative_rotations=[],
        tracks=[],

        # Optimisation
        attitudes_chained={},
        attitudes_averaged={},
        attitudes_bundle={},
        star_directions={},
        averaging_log=[],
        bundle_log=[],
        gauge_free=False,

        # Audit
        stage_runtimes={},
        decision_reasoning="",
        decision_log=[],
        warnings=[],

        # Error handling
        error=None,
        failed_stage=None,
    )


# ==================== STATE UTILITIES ====================

def recording_bounds(state: TrackingState) -> Tuple[int, int]:
    """[start, end) of the recording in microseconds"""
    duration = state["config"].simulation.duration_s
    return 0, int(round(duration * 1e6))


def log_decision(
    node_name: str,
    decision_type: str,
    reasoning: str,
    data: Optional[Dict] = None
) -> Dict[str, Any]:
    """
    Build an entry for the decision audit log

    Nodes return it as ``{"decision_log": [entry]}``; the reducer appends it.

    Args:
        node_name: Name of node making decision
        decision_type: Type of decision (e.g., "frame_selection", "identification")
        reasoning: Natural language reasoning
        data: Additional data about the decision
    """
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "node": node_name,
        "decision_type": decision_type,
        "reasoning": reasoning,
        "data": data or {}
    }


def stage_failure(node_name: str, stage: str, exc: Exception, elapsed_s: float) -> Dict[str, Any]:
    """
    State update recording a failed stage

    The graph routes to END on ``error``; products of earlier stages stay in state.
    """
    message = str(exc) if str(exc).startswith(f"[{stage}]") else f"[{stage}] {exc}"
    return {
        "error": message,
        "failed_stage": stage,
        "stage_runtimes": {stage: elapsed_s},
        "decision_reasoning": f"## ❌ Stage `{stage}` failed\n\n{exc}",
        "decision_log": [
            log_decision(
                node_name=node_name,
                decision_type=f"{stage}_failure",
                reasoning=message,
                data={"exception_type": type(exc).__name__},
            )
        ],
    }
