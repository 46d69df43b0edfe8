"""
Star Identification Node
========================

Second node: identifies the selected frames against the catalog and
solves their absolute rotations (index set A).

A run where no frame identifies cannot be anchored; the node then fails
the pipeline and nothing downstream runs.
"""

import logging
import time
from collections import Counter
from typing import Any, Dict

from langsmith import traceable

from src.core.exceptions import StageError
from src.core.state import TrackingState, log_decision, stage_failure
from src.tools.star_id import build_index_for_camera, identified_rotations, identify_frames

logger = logging.getLogger(__name__)

STAGE = "star_id"


@traceable(name="star_id_node")
def star_id_node(state: TrackingState) -> Dict[str, Any]:
    """
    Triangle-hash identification and Wahba solve per selected frame.

    Returns:
        identification, absolute_rotations and the audit fields
    """
    logger.info("=" * 70)
    logger.info("STAR ID NODE - Absolute Rotations")
    logger.info("=" * 70)

    started = time.perf_counter()
    results = {}
    try:
        config = state["config"]
        selected = state.get("selected_frames", [])
        point_sets = {ps.frame: ps for ps in state.get("point_sets", [])}
        K = state["intrinsics"]
        catalog = state["catalog"]
        events = state["events"]

        if selected:
            index = build_index_for_camera(catalog, K, events.width, events.height, config.star_id)
            logger.info(f"📐 Triangle index: {len(index)} triples")
            results = identify_frames(point_sets, selected, index, K, catalog, config.star_id)

        absolute = identified_rotations(results)
        statuses = Counter(r.status for r in results.values())
        logger.info(
            f"🌌 Identified {statuses['identified']}/{len(selected)} frames "
            f"({statuses['failed']} failed, {statuses['skipped']} skipped)"
        )

        if not absolute:
            raise StageError(STAGE, "absolute rotation set A is empty: no selected frame was identified")

    except Exception as e:
        if isinstance(e, StageError):
            logger.error(f"❌ {e}")
        else:
            logger.exception(f"❌ Star identification failed: {e}")
        update = stage_failure("star_id_node", STAGE, e, time.perf_counter() - started)
        update["identification"] = results
        return update

    elapsed = time.perf_counter() - started
    matched = [r.n_matched for r in results.values() if r.status == "identified"]
    reasoning = f"""## 🌌 Star Identification Complete

**Selected frames**: {len(selected)}
- ✅ Identified: {statuses['identified']}
- ❌ Failed: {statuses['failed']}
- ⏭️ Skipped (< 3 points): {statuses['skipped']}

**Mean matched stars**: {sum(matched) / len(matched):.1f}

**Next**: Route to `registration`
"""

    warnings = []
    if statuses["failed"]:
        warnings.append(f"{statuses['failed']} selected frames failed identification")

    logger.info("=" * 70 + "\n")
    return {
        "identification": results,
        "absolute_rotations": absolute,
        "stage_runtimes": {STAGE: elapsed},
        "decision_reasoning": reasoning,
        "decision_log": [
            log_decision(
                node_name="star_id_node",
                decision_type="identification",
                reasoning=f"{len(absolute)} absolute rotations from {len(selected)} selected frames",
                data={
                    "statuses": dict(statuses),
                    "identified_frames": sorted(absolute),
                    "failed": {i: r.reason for i, r in results.items() if r.status != "identified"},
                },
            )
        ],
        "warnings": warnings,
    }
