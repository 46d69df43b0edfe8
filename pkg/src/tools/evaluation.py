"""
Evaluation
==========

Angular-error statistics of attitude estimates against ground truth.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.constants import ERROR_BUCKET_EDGES_DEG, STAGE_GROUPS
from src.core.exceptions import EvaluationError
from src.models import (
    ErrorBuckets,
    ErrorStats,
    EvaluationReport,
    MethodReport,
    RelativeReport,
    Rotation,
)
from src.tools.geometry import angular_errors, project_to_so3, rotation_to_euler

logger = logging.getLogger(__name__)


# ==================== STATISTICS ====================

def error_stats(errors: Iterable[float]) -> ErrorStats:
    """RMSE and population SD over the same error list"""
    e = np.asarray(list(errors), dtype=np.float64)
    if e.size == 0:
        return ErrorStats(count=0, rmse=0.0, sd=0.0, mean=0.0, max=0.0)
    return ErrorStats(
        count=int(e.size),
        rmse=float(np.sqrt(np.mean(e * e))),
        sd=float(np.std(e, ddof=0)),
        mean=float(np.mean(e)),
        max=float(np.max(e)),
    )


def error_buckets(errors: Iterable[float]) -> ErrorBuckets:
    e = np.asarray(list(errors), dtype=np.float64)
    lo, hi = ERROR_BUCKET_EDGES_DEG
    return ErrorBuckets(
        below_1deg=int(np.count_nonzero(e < lo)),
        below_10deg=int(np.count_nonzero((e >= lo) & (e < hi))),
        above_10deg=int(np.count_nonzero(e >= hi)),
    )


# ==================== PER-FRAME ERRORS ====================

def _stack(rotations: Dict[int, Rotation], frames: Sequence[int]) -> np.ndarray:
    return np.array([rotations[f].matrix for f in frames]).reshape(-1, 3, 3)


def per_frame_errors(
    estimates: Dict[int, Rotation],
    ground_truth: Dict[int, Rotation],
    frames: Optional[Sequence[int]] = None,
    label: str = "estimate",
) -> Dict[int, float]:
    """
    Angular error (degrees) per frame.

    Args:
        frames: frames to evaluate; defaults to every ground-truth frame

    Raises:
        EvaluationError: an evaluated frame has no estimate or no ground truth
    """
    frames = sorted(ground_truth) if frames is None else sorted(frames)
    missing = [f for f in frames if f not in estimates]
    if missing:
        raise EvaluationError(missing, label)
    missing_gt = [f for f in frames if f not in ground_truth]
    if missing_gt:
        raise EvaluationError(missing_gt, "ground truth")
    if not frames:
        return {}
    errs = angular_errors(_stack(estimates, frames), _stack(ground_truth, frames))
    return {f: float(e) for f, e in zip(frames, errs)}


def align_global_rotation(
    estimates: Dict[int, Rotation],
    ground_truth: Dict[int, Rotation],
) -> Rotation:
    """
    Q minimizing sum ||R_i Q - R*_i||_F over the common frames.

    Removes the gauge ambiguity of an estimate defined up to a global
    (right-multiplied) rotation.
    """
    frames = sorted(set(estimates) & set(ground_truth))
    if not frames:
        return Rotation.identity()
    M = sum(estimates[f].matrix.T @ ground_truth[f].matrix for f in frames)
    return Rotation(matrix=project_to_so3(M))


def aligned_errors(
    estimates: Dict[int, Rotation],
    ground_truth: Dict[int, Rotation],
    frames: Optional[Sequence[int]] = None,
) -> Dict[int, float]:
    frames = sorted(ground_truth) if frames is None else sorted(frames)
    Q = align_global_rotation({f: estimates[f] for f in frames if f in estimates}, ground_truth)
    aligned = {f: estimates[f] @ Q for f in frames if f in estimates}
    return per_frame_errors(aligned, ground_truth, frames)


def relative_errors(
    relative: Dict[Tuple[int, int], Rotation],
    ground_truth: Dict[int, Rotation],
) -> Dict[Tuple[int, int], float]:
    """Error of each R_ji against R*_j (R*_i)^T"""
    pairs = sorted(relative)
    missing = sorted({f for p in pairs for f in p if f not in ground_truth})
    if missing:
        raise EvaluationError(missing, "ground truth")
    if not pairs:
        return {}
    est = np.array([relative[p].matrix for p in pairs])
    gt = np.array([ground_truth[j].matrix @ ground_truth[i].matrix.T for j, i in pairs])
    return {p: float(e) for p, e in zip(pairs, angular_errors(est, gt))}


def euler_series(rotations: Dict[int, Rotation]) -> Dict[int, np.ndarray]:
    """frame -> (yaw, pitch, roll) degrees"""
    return {f: rotation_to_euler(R) for f, R in sorted(rotations.items())}


# ==================== REPORT ====================

def method_report(
    estimates: Dict[int, Rotation],
    ground_truth: Dict[int, Rotation],
    frames: Optional[Sequence[int]] = None,
    label: str = "estimate",
    aligned: bool = True,
) -> MethodReport:
    errs = per_frame_errors(estimates, ground_truth, frames, label)
    aligned_stats = None
    if aligned and errs:
        aligned_stats = error_stats(aligned_errors(estimates, ground_truth, list(errs)).values())
    return MethodReport(per_frame=errs, stats=error_stats(errs.values()), aligned_stats=aligned_stats)


def group_runtimes(stage_runtimes: Dict[str, float]) -> Dict[str, float]:
    """Per-node runtimes summed into image generation / measurement extraction / optimisation"""
    grouped = {group: 0.0 for group in dict.fromkeys(STAGE_GROUPS.values())}
    for node, seconds in stage_runtimes.items():
        group = STAGE_GROUPS.get(node)
        if group is not None:
            grouped[group] += float(seconds)
    grouped["total"] = float(sum(stage_runtimes.values()))
    return grouped


def evaluate(
    estimates: Dict[str, Dict[int, Rotation]],
    ground_truth: Dict[int, Rotation],
    n_frames: Optional[int] = None,
    absolute: Optional[Dict[int, Rotation]] = None,
    relative: Optional[Dict[Tuple[int, int], Rotation]] = None,
    runtimes: Optional[Dict[str, float]] = None,
) -> EvaluationReport:
    """
    Evaluation report of every available attitude estimate.

    Each method is evaluated on every frame in ``range(n_frames)`` (defaults
    to the ground-truth frames). An empty or absent method is listed as missing.

    Raises:
        EvaluationError: a present method lacks some frames
    """
    frames = list(range(n_frames)) if n_frames is not None else sorted(ground_truth)
    methods: Dict[str, MethodReport] = {}
    missing_methods: List[str] = []
    for name, est in estimates.items():
        if not est:
            missing_methods.append(name)
            continue
        methods[name] = method_report(est, ground_truth, frames, label=name)

    abs_report = None
    abs_buckets = None
    if absolute:
        abs_report = method_report(absolute, ground_truth, sorted(absolute), label="absolute", aligned=False)
        abs_buckets = error_buckets(abs_report.per_frame.values())

    rel_report = None
    if relative:
        rel = relative_errors(relative, ground_truth)
        rel_report = RelativeReport(
            per_pair={f"{j},{i}": e for (j, i), e in rel.items()},
            stats=error_stats(rel.values()),
        )

    for name, m in methods.items():
        logger.info(f"📊 {name}: RMSE {m.stats.rmse:.4f} deg, SD {m.stats.sd:.4f} deg over {m.stats.count} frames")
    return EvaluationReport(
        n_frames=len(frames),
        methods=methods,
        absolute=abs_report,
        absolute_buckets=abs_buckets,
        relative=rel_report,
        runtimes=group_runtimes(runtimes) if runtimes else None,
        missing_methods=missing_methods,
    )
