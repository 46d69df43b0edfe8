"""
Averaging Node
==============

Fourth node: fuses the absolute rotations (set A) and the relative
rotations (graph N) into one attitude per frame by augmented rotation
averaging, and produces the chained baseline from the same measurements.

Frames no path connects to an absolute rotation are left out of the
averaged attitudes and reported as warnings. With no absolute rotation
at all the node falls back to chaining anchored at identity and flags
the result as gauge-free.
"""

import logging
import time
from typing import Any, Dict

from langsmith import traceable

from src.core.exceptions import AnchorFreeError
from src.core.state import TrackingState, log_decision, stage_failure
from src.models import MeasurementSet
from src.tools.averaging import chain_rotations, solve_augmented_averaging, unanchored_segments

logger = logging.getLogger(__name__)

STAGE = "averaging"


@traceable(name="averaging_node")
def averaging_node(state: TrackingState) -> Dict[str, Any]:
    """
    Augmented rotation averaging plus the chained baseline.

    Returns:
        attitudes_chained, attitudes_averaged, averaging_log, gauge_free
        and the audit fields
    """
    logger.info("=" * 70)
    logger.info("AVERAGING NODE - Augmented Rotation Averaging")
    logger.info("=" * 70)

    started = time.perf_counter()
    warnings = []
    try:
        config = state["config"].averaging
        n_frames = len(state.get("images", [])) or len(state.get("point_sets", []))
        measurements = MeasurementSet.from_estimates(
            n_frames=n_frames,
            relative=state.get("relative_rotations", []),
            absolute=state.get("absolute_rotations", {}),
            alpha=config.alpha,
        )
        logger.info(
            f"📊 {n_frames} frames, {len(measurements.relative)} relative and "
            f"{len(measurements.absolute)} absolute rotations"
        )

        gauge_free = False
        log = []
        try:
            segments = unanchored_segments(measurements)
            averaged, log = solve_augmented_averaging(measurements, config, allow_partial=True)
            chained = chain_rotations(measurements, partial=True)
        except AnchorFreeError:
            anchor = min((j for j, _ in measurements.relative), default=0)
            logger.warning(f"⚠️  No absolute rotation: chaining from frame {anchor} at identity (gauge-free)")
            warnings.append(f"no absolute rotation; attitudes are gauge-free, anchored at frame {anchor}")
            gauge_free = True
            segments = []
            chained = chain_rotations(measurements, partial=True, anchor_frame=anchor)
            averaged = dict(chained)

        if segments:
            warnings.append(f"unanchored frame segments left out of averaging: {segments}")
        unchained = n_frames - len(chained)
        if unchained:
            logger.warning(f"⚠️  {unchained} frames unreachable by chaining")
            warnings.append(f"{unchained} frames unreachable by chaining")

    except Exception as e:
        logger.exception(f"❌ Averaging failed: {e}")
        return stage_failure("averaging_node", STAGE, e, time.perf_counter() - started)

    elapsed = time.perf_counter() - started
    final = log[-1] if log else {"iter": 0, "objective": 0.0, "max_update": 0.0}
    logger.info(f"✅ {len(averaged)} averaged, {len(chained)} chained attitudes")

    reasoning = f"""## 🧮 Rotation Averaging Complete

**Averaged attitudes**: {len(averaged)} / {n_frames}
**Chained attitudes**: {len(chained)} / {n_frames}
**Iterations**: {final['iter']}, final objective {final['objective']:.3e}
**Gauge-free**: {'yes' if gauge_free else 'no'}

**Next**: Route to `bundle`
"""

    logger.info("=" * 70 + "\n")
    return {
        "attitudes_chained": chained,
        "attitudes_averaged": averaged,
        "averaging_log": log,
        "gauge_free": gauge_free,
        "stage_runtimes": {STAGE: elapsed},
        "decision_reasoning": reasoning,
        "decision_log": [
            log_decision(
                node_name="averaging_node",
                decision_type="rotation_averaging",
                reasoning=f"{len(averaged)} frames averaged in {final['iter']} iterations",
                data={
                    "n_frames": n_frames,
                    "n_relative": len(measurements.relative),
                    "n_absolute": len(measurements.absolute),
                    "alpha": config.alpha,
                    "huber_delta": config.huber_delta,
                    "unanchored_segments": [list(s) for s in segments],
                    "gauge_free": gauge_free,
                },
            )
        ],
        "warnings": warnings,
    }
