"""
Frames Node
===========

First node of the tracking pipeline: turns the event stream into event
images, selects the frames worth identifying and extracts point sets.

This node:
1. Partitions the recording into non-overlapping integration windows
2. Counts distinct-timestamp events per pixel in each window
3. Mean-filters every image and computes its active pixel count (APC)
4. Selects the frames whose APC reaches eps2
5. Extracts a point set from every frame (all frames feed registration)

Node Signature:
    Input: TrackingState with events, intrinsics and config
    Output: images, apc_values, selected_frames, point_sets
"""

import logging
import time
from typing import Any, Dict

from langsmith import traceable

from src.core.state import TrackingState, log_decision, recording_bounds, stage_failure
from src.rules.frame_rules import apc_range, select_by_apc, selection_summary
from src.tools.frames import apc_values, build_event_images, extract_point_sets

logger = logging.getLogger(__name__)

STAGE = "frames"


@traceable(name="frames_node")
def frames_node(state: TrackingState) -> Dict[str, Any]:
    """
    Event image formation and frame selection.

    Args:
        state: Current tracking state containing:
            - events: input event stream
            - intrinsics: event camera intrinsics
            - config: frames section (integration_ms, eps1, eps2, points)

    Returns:
        Dictionary with updated state fields:
            - images, apc_values, selected_frames, point_sets
            - stage_runtimes, decision_reasoning, decision_log, warnings
    """
    logger.info("=" * 70)
    logger.info("FRAMES NODE - Event Images & APC Selection")
    logger.info("=" * 70)

    started = time.perf_counter()
    try:
        config = state["config"].frames
        events = state["events"]
        t_start, t_end = recording_bounds(state)
        warnings = []

        if len(events) == 0:
            logger.warning("⚠️  Event stream is empty")
            warnings.append("event stream is empty")

        # ============ EVENT IMAGES ============

        images = build_event_images(events, t_start, t_end, config.integration_ms)
        logger.info(f"🖼️  {len(images)} event images of {config.integration_ms:g} ms")

        # ============ APC SELECTION ============

        values = apc_values(images, config.eps1)
        selected = select_by_apc(values, config.eps2)
        lo, hi = apc_range(values)
        logger.info(f"🎯 Selected {len(selected)}/{len(images)} frames (APC range {lo}..{hi}, eps2={config.eps2})")
        if images and not selected:
            warnings.append(f"no frame reached APC >= {config.eps2}")

        # ============ POINT SETS ============

        point_sets = extract_point_sets(images, config.eps1, state["intrinsics"], mode=config.points)
        counts = [len(ps) for ps in point_sets]
        empty = sum(1 for c in counts if c == 0)
        if empty:
            logger.warning(f"⚠️  {empty} frames have no points")
        logger.info(f"📍 {sum(counts)} points extracted ({config.points})")

    except Exception as e:
        logger.exception(f"❌ Frames stage failed: {e}")
        return stage_failure("frames_node", STAGE, e, time.perf_counter() - started)

    elapsed = time.perf_counter() - started
    summary = selection_summary(values, selected)
    reasoning = f"""## 🖼️ Event Images Built

**Frames**: {len(images)} × {config.integration_ms:g} ms
**Selected for identification**: {len(selected)} (APC ≥ {config.eps2})
**APC range**: {lo} .. {hi}
**Points**: {sum(counts)} ({config.points}), {empty} empty frames

**Next**: Route to `star_id`
"""

    logger.info("=" * 70 + "\n")
    return {
        "images": images,
        "apc_values": values,
        "selected_frames": selected,
        "point_sets": point_sets,
        "stage_runtimes": {STAGE: elapsed},
        "decision_reasoning": reasoning,
        "decision_log": [
            log_decision(
                node_name="frames_node",
                decision_type="frame_selection",
                reasoning=f"{len(selected)} of {len(images)} frames selected by APC",
                data={**summary, "eps1": config.eps1, "eps2": config.eps2, "empty_frames": empty},
            )
        ],
        "warnings": warnings,
    }
