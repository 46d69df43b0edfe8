"""
Registration Node
=================

Third node: trimmed ICP between every pair of frames at most W apart,
then star tracks from the consecutive-pair inlier associations.

Node Signature:
    Input: TrackingState with point_sets, intrinsics and config
    Output: relative_rotations, tracks
"""

import logging
import time
from typing import Any, Dict

from langsmith import traceable

from src.core.state import TrackingState, log_decision, stage_failure
from src.tools.registration import build_tracks, relative_rotations

logger = logging.getLogger(__name__)

STAGE = "registration"


@traceable(name="registration_node")
def registration_node(state: TrackingState) -> Dict[str, Any]:
    logger.info("=" * 70)
    logger.info("REGISTRATION NODE - Trimmed ICP & Star Tracks")
    logger.info("=" * 70)

    started = time.perf_counter()
    try:
        config = state["config"].registration
        point_sets = state.get("point_sets", [])

        relative = relative_rotations(
            point_sets,
            config.window,
            config.trim_fraction,
            state["intrinsics"],
            config,
        )
        tracks = build_tracks(relative)
        logger.info(f"🧵 {len(tracks)} star tracks")

    except Exception as e:
        logger.exception(f"❌ Registration failed: {e}")
        return stage_failure("registration_node", STAGE, e, time.perf_counter() - started)

    elapsed = time.perf_counter() - started

    n_frames = len(point_sets)
    consecutive = {r.i for r in relative if r.i - r.j == 1}
    broken = [i for i in range(1, n_frames) if i not in consecutive]
    warnings = []
    if broken:
        logger.warning(f"⚠️  {len(broken)} frames lack a registration to their predecessor")
        warnings.append(f"{len(broken)} consecutive pairs not registered")

    lengths = [len(t) for t in tracks]
    reasoning = f"""## 🔗 Registration Complete

**Frames**: {n_frames}, window W = {config.window}, τ = {config.trim_fraction:g}
**Relative rotations accepted**: {len(relative)}
**Unregistered consecutive pairs**: {len(broken)}
**Star tracks**: {len(tracks)} (longest {max(lengths) if lengths else 0} frames)

**Next**: Route to `averaging`
"""

    logger.info("=" * 70 + "\n")
    return {
        "relative_rotations": relative,
        "tracks": tracks,
        "stage_runtimes": {STAGE: elapsed},
        "decision_reasoning": reasoning,
        "decision_log": [
            log_decision(
                node_name="registration_node",
                decision_type="registration",
                reasoning=f"{len(relative)} relative rotations, {len(tracks)} tracks",
                data={
                    "n_relative": len(relative),
                    "n_tracks": len(tracks),
                    "unregistered_consecutive": broken,
                    "window": config.window,
                    "trim_fraction": config.trim_fraction,
                },
            )
        ],
        "warnings": warnings,
    }
