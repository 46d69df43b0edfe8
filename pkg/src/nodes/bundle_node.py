"""
Bundle Node
===========

Last node: rotation-only bundle adjustment of the averaged attitudes and
the star directions of the tracks, by Levenberg-Marquardt.

Frames outside the adjustment (no track observation) keep their averaged
attitude so the bundle-adjusted set covers the same frames.
"""

import logging
import time
from typing import Any, Dict

from langsmith import traceable

from src.core.state import TrackingState, log_decision, stage_failure
from src.tools.bundle import build_problem, bundle_adjust

logger = logging.getLogger(__name__)

STAGE = "bundle"


@traceable(name="bundle_node")
def bundle_node(state: TrackingState) -> Dict[str, Any]:
    logger.info("=" * 70)
    logger.info("BUNDLE NODE - Rotation-Only Bundle Adjustment")
    logger.info("=" * 70)

    started = time.perf_counter()
    config = state["config"].bundle
    averaged = state.get("attitudes_averaged", {})

    if not config.enabled:
        logger.info("⏭️  Bundle adjustment disabled")
        return {
            "stage_runtimes": {STAGE: time.perf_counter() - started},
            "decision_reasoning": "## ⏭️ Bundle Adjustment Disabled\n\nNo bundle-adjusted attitudes produced.",
            "decision_log": [
                log_decision("bundle_node", "bundle_adjustment", "disabled by configuration")
            ],
        }

    try:
        point_sets = {ps.frame: ps for ps in state.get("point_sets", [])}
        problem, dropped = build_problem(
            averaged,
            state.get("tracks", []),
            point_sets,
            anchor=config.anchor,
            min_track_length=config.min_track_length,
            priors=state.get("absolute_rotations", {}),
            prior_weight=config.prior_weight,
        )
        if dropped:
            logger.warning(f"⚠️  {len(dropped)} tracks dropped before adjustment")
        logger.info(
            f"📦 {len(problem.frames)} frames, {len(problem.directions)} stars, "
            f"{problem.n_observations()} observations"
        )

        result = bundle_adjust(problem, config)
        dropped = sorted(set(dropped) | set(result.dropped_tracks))

    except Exception as e:
        logger.exception(f"❌ Bundle adjustment failed: {e}")
        return stage_failure("bundle_node", STAGE, e, time.perf_counter() - started)

    elapsed = time.perf_counter() - started
    attitudes = {**averaged, **result.attitudes}
    logger.info(
        f"✅ Cost {result.initial_cost:.4e} → {result.final_cost:.4e} "
        f"in {result.iterations} iterations ({result.stop_reason})"
    )

    warnings = []
    if dropped:
        warnings.append(f"{len(dropped)} star tracks dropped from bundle adjustment")
    if not result.converged:
        warnings.append(f"bundle adjustment stopped without converging ({result.stop_reason})")

    reasoning = f"""## 📦 Bundle Adjustment Complete

**Frames adjusted**: {len(result.attitudes)} of {len(attitudes)}
**Star directions**: {len(result.directions)} ({len(dropped)} tracks dropped)
**Cost**: {result.initial_cost:.4e} → {result.final_cost:.4e}
**Iterations**: {result.iterations}, stop reason `{result.stop_reason}`
**Gauge**: {config.anchor}
**Absolute-rotation priors**: {len(problem.priors)} frames, weight {problem.prior_weight}
"""

    logger.info("=" * 70 + "\n")
    return {
        "attitudes_bundle": attitudes,
        "star_directions": result.directions,
        "bundle_log": result.log,
        "stage_runtimes": {STAGE: elapsed},
        "decision_reasoning": reasoning,
        "decision_log": [
            log_decision(
                node_name="bundle_node",
                decision_type="bundle_adjustment",
                reasoning=f"LM stopped after {result.iterations} iterations: {result.stop_reason}",
                data={
                    "initial_cost": result.initial_cost,
                    "final_cost": result.final_cost,
                    "iterations": result.iterations,
                    "converged": result.converged,
                    "dropped_tracks": dropped,
                    "anchor": config.anchor,
                    "priors": len(problem.priors),
                },
            )
        ],
        "warnings": warnings,
    }
