"""
Rotation Averaging
==================

Augmented rotation averaging: relative rotations R_ji (R_j ~= R_ji R_i) and
absolute rotations R_k are fused over M + 1 nodes, the last one a dummy
node standing for the inertial frame. Absolute rotations enter as edges
(k, dummy) with weight alpha; after convergence every attitude is right
multiplied by the dummy's transpose so the dummy becomes identity.

Also provides ``chain_rotations``, the drift-prone baseline that simply
composes relative rotations from the earliest absolute rotation.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from langsmith import traceable
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from src.core.config import AveragingConfig
from src.core.exceptions import (
    AnchorFreeError,
    NumericalFailureError,
    UnanchoredSegmentError,
    UnchainedSegmentError,
)
from src.models import MeasurementSet, Rotation
from src.tools.geometry import exp_so3, log_so3, project_to_so3

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 20


# ==================== GRAPH ====================

def _edges(measurements: MeasurementSet, frames: Optional[List[int]] = None):
    """
    Edge arrays over nodes 0..M (M = dummy).

    Returns:
        (j, i, R_ji stack, base weights)
    """
    M = measurements.n_frames
    keep = None if frames is None else set(frames)
    js, is_, rots, ws = [], [], [], []
    for (j, i) in sorted(measurements.relative):
        if keep is not None and (j not in keep or i not in keep):
            continue
        js.append(j)
        is_.append(i)
        rots.append(measurements.relative[(j, i)].matrix)
        ws.append(1.0)
    for k in sorted(measurements.absolute):
        if keep is not None and k not in keep:
            continue
        js.append(k)
        is_.append(M)
        rots.append(measurements.absolute[k].matrix)
        ws.append(measurements.alpha)
    return (
        np.array(js, dtype=np.int64),
        np.array(is_, dtype=np.int64),
        np.array(rots, dtype=np.float64).reshape(-1, 3, 3),
        np.array(ws, dtype=np.float64),
    )


def _segments(frames: List[int]) -> List[Tuple[int, int]]:
    """Contiguous runs of frame indices"""
    segs: List[Tuple[int, int]] = []
    for f in sorted(frames):
        if segs and f == segs[-1][1] + 1:
            segs[-1] = (segs[-1][0], f)
        else:
            segs.append((f, f))
    return segs


def anchored_frames(measurements: MeasurementSet) -> List[int]:
    """Frames connected to the dummy node through relative and absolute edges"""
    M = measurements.n_frames
    j, i, _, _ = _edges(measurements)
    graph = sparse.coo_matrix((np.ones(len(j)), (j, i)), shape=(M + 1, M + 1))
    _, labels = connected_components(graph, directed=False)
    return [f for f in range(M) if labels[f] == labels[M]]


def unanchored_segments(measurements: MeasurementSet) -> List[Tuple[int, int]]:
    anchored = set(anchored_frames(measurements))
    return _segments([f for f in range(measurements.n_frames) if f not in anchored])


# ==================== OBJECTIVE ====================

def _huber(c: np.ndarray, delta: float) -> np.ndarray:
    return np.where(c <= delta, c * c, 2.0 * delta * c - delta * delta)


def _chordal(R: np.ndarray, j: np.ndarray, i: np.ndarray, Rji: np.ndarray) -> np.ndarray:
    """||R_j - R_ji R_i||_F per edge"""
    return np.linalg.norm(R[j] - Rji @ R[i], axis=(1, 2))


def _objective(R, j, i, Rji, w, delta) -> float:
    return float(np.sum(w * _huber(_chordal(R, j, i, Rji), delta)))


def averaging_objective(
    measurements: MeasurementSet,
    attitudes: Dict[int, Rotation],
    huber_delta: Optional[float] = None,
) -> float:
    """
    sum_N ||R_j - R_ji R_i||^2 + alpha sum_A ||R_k - R_k~||^2 with the dummy at identity.

    With ``huber_delta`` the squared norms are replaced by the Huber loss.
    """
    M = measurements.n_frames
    R = np.tile(np.eye(3), (M + 1, 1, 1))
    for k, rot in attitudes.items():
        R[k] = rot.matrix
    j, i, Rji, w = _edges(measurements, frames=sorted(attitudes))
    c = _chordal(R, j, i, Rji)
    if huber_delta is None:
        return float(np.sum(w * c * c))
    return float(np.sum(w * _huber(c, huber_delta)))


# ==================== SOLVER ====================

def _normal_equations(R, j, i, Rji, w, delta, n_nodes):
    """Gauss-Newton system for left increments R <- exp(d) R"""
    E = Rji @ R[i] @ np.transpose(R[j], (0, 2, 1))
    r = log_so3(E).reshape(-1, 3)
    c = np.linalg.norm(R[j] - Rji @ R[i], axis=(1, 2))
    irls = np.where(c <= delta, 1.0, delta / np.maximum(c, 1e-300))
    we = w * irls

    n_e = len(j)
    eye = np.broadcast_to(np.eye(3), (n_e, 3, 3))
    blocks = [
        (i, i, we[:, None, None] * eye),
        (j, j, we[:, None, None] * eye),
        (i, j, -we[:, None, None] * np.transpose(Rji, (0, 2, 1))),
        (j, i, -we[:, None, None] * Rji),
    ]
    rows, cols, vals = [], [], []
    a = np.arange(3)
    for bi, bj, blk in blocks:
        rr = (3 * bi)[:, None, None] + a[None, :, None]
        cc = (3 * bj)[:, None, None] + a[None, None, :]
        rows.append(np.broadcast_to(rr, blk.shape).ravel())
        cols.append(np.broadcast_to(cc, blk.shape).ravel())
        vals.append(blk.ravel())
    n = 3 * n_nodes
    H = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsc()

    g = np.zeros(n)
    gi = we[:, None] * np.einsum("eba,eb->ea", Rji, r)
    gj = -we[:, None] * r
    np.add.at(g, (3 * i[:, None] + a).ravel(), gi.ravel())
    np.add.at(g, (3 * j[:, None] + a).ravel(), gj.ravel())
    return H, g


@traceable(name="solve_augmented_averaging")
def solve_augmented_averaging(
    measurements: MeasurementSet,
    config: Optional[AveragingConfig] = None,
    allow_partial: bool = False,
) -> Tuple[Dict[int, Rotation], List[Dict[str, float]]]:
    """
    Augmented rotation averaging by robust Gauss-Newton (IRLS) from identity.

    Args:
        measurements: relative and absolute rotations
        config: Huber threshold, iteration cap, convergence tolerance
        allow_partial: solve only the frames connected to an absolute
            rotation instead of raising

    Returns:
        (frame -> attitude, convergence log of {iter, objective, max_update})

    Raises:
        AnchorFreeError: no absolute rotation
        UnanchoredSegmentError: some frames are not connected to any absolute rotation
        NumericalFailureError: the objective became non-finite
    """
    config = config or AveragingConfig(alpha=measurements.alpha)
    M = measurements.n_frames
    if not measurements.absolute:
        raise AnchorFreeError("augmented averaging needs at least one absolute rotation")

    anchored = anchored_frames(measurements)
    if len(anchored) < M:
        missing = _segments([f for f in range(M) if f not in set(anchored)])
        if not allow_partial:
            raise UnanchoredSegmentError(missing)
        logger.warning(f"⚠️  Averaging {len(anchored)} of {M} frames; unanchored segments {missing}")

    # dense node numbering: anchored frames, then the dummy
    n_nodes = len(anchored) + 1
    node_of = {f: n for n, f in enumerate(anchored)}
    node_of[M] = n_nodes - 1
    j, i, Rji, w = _edges(measurements, frames=anchored)
    j = np.array([node_of[int(v)] for v in j], dtype=np.int64)
    i = np.array([node_of[int(v)] for v in i], dtype=np.int64)

    R = np.tile(np.eye(3), (n_nodes, 1, 1))
    delta = config.huber_delta
    objective = _objective(R, j, i, Rji, w, delta)
    log: List[Dict[str, float]] = [{"iter": 0, "objective": objective, "max_update": 0.0}]

    for it in range(1, config.max_iterations + 1):
        if objective == 0.0:
            break
        H, g = _normal_equations(R, j, i, Rji, w, delta, n_nodes)
        mu = 1e-10 * float(np.mean(H.diagonal())) or 1e-12
        step = spsolve(H + mu * sparse.identity(H.shape[0], format="csc"), -g).reshape(n_nodes, 3)
        if not np.all(np.isfinite(step)):
            raise NumericalFailureError("non-finite averaging step", dump={"iter": it, "objective": objective})

        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS + 1):
            R_try = exp_so3(t * step) @ R
            obj_try = _objective(R_try, j, i, Rji, w, delta)
            if not np.isfinite(obj_try):
                raise NumericalFailureError(
                    "non-finite averaging objective", dump={"iter": it, "objective": objective}
                )
            if obj_try <= objective:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break

        max_update = float(np.max(np.linalg.norm(t * step, axis=1)))
        R, objective = R_try, obj_try
        log.append({"iter": it, "objective": objective, "max_update": max_update})
        if max_update < config.tolerance_rad:
            break

    R = project_to_so3(R)
    dummy_T = R[-1].T
    attitudes = {f: Rotation(matrix=project_to_so3(R[node_of[f]] @ dummy_T)) for f in anchored}
    logger.info(
        f"🧮 Averaging: {len(anchored)} frames, {len(j)} edges, "
        f"{len(log) - 1} iterations, objective {objective:.3e}"
    )
    return attitudes, log


def augmented_rotation_averaging(
    measurements: MeasurementSet,
    config: Optional[AveragingConfig] = None,
) -> Dict[int, Rotation]:
    """Attitude of every frame (see ``solve_augmented_averaging``)"""
    attitudes, _ = solve_augmented_averaging(measurements, config)
    return attitudes


# ==================== CHAINING ====================

def _adjacency(rel: Dict[Tuple[int, int], Rotation]) -> Dict[int, List[Tuple[int, int, bool]]]:
    """frame -> [(gap, neighbour, forward)] sorted shortest edge first"""
    adj: Dict[int, List[Tuple[int, int, bool]]] = {}
    for (j, i) in rel:
        adj.setdefault(i, []).append((i - j, j, True))
        adj.setdefault(j, []).append((i - j, i, False))
    for edges in adj.values():
        edges.sort()
    return adj


def _reach(rel, adj, chained, f) -> Optional[Rotation]:
    for _, other, forward in adj.get(f, []):
        if other not in chained:
            continue
        if forward:
            return rel[(other, f)].inverse() @ chained[other]
        return rel[(f, other)] @ chained[other]
    return None


def chain_rotations(
    measurements: MeasurementSet,
    partial: bool = False,
    anchor_frame: Optional[int] = None,
) -> Dict[int, Rotation]:
    """
    Compose relative rotations outward from the earliest absolute rotation.

    Frames are visited in forward then backward sweeps, repeated until no
    frame is added. Each frame is reached through the shortest edge to an
    already chained frame, in either direction: R_i = R_ji^T R_j for an
    incoming edge, R_j = R_ji R_i for an outgoing one.

    Args:
        measurements: relative and absolute rotations
        partial: skip unreachable frames instead of raising
        anchor_frame: with no absolute rotations, chain from this frame at identity

    Raises:
        AnchorFreeError: no absolute rotation and no ``anchor_frame``
        UnchainedSegmentError: a frame no edge reaches (unless ``partial``)
    """
    M = measurements.n_frames
    rel = measurements.relative
    if measurements.absolute:
        k0 = min(measurements.absolute)
        R0 = measurements.absolute[k0]
    elif anchor_frame is not None:
        k0, R0 = anchor_frame, Rotation.identity()
    else:
        raise AnchorFreeError("chaining needs an absolute rotation or an anchor frame")

    adj = _adjacency(rel)
    chained: Dict[int, Rotation] = {k0: R0}
    order = list(range(k0 + 1, M)) + list(range(k0 - 1, -1, -1))
    changed = True
    while changed:
        changed = False
        for f in order:
            if f in chained:
                continue
            R = _reach(rel, adj, chained, f)
            if R is not None:
                chained[f] = R
                changed = True

    missing = [f for f in range(M) if f not in chained]
    if missing:
        if not partial:
            raise UnchainedSegmentError(missing[0])
        logger.debug(f"Chaining skipped {len(missing)} unreachable frames")
    return dict(sorted(chained.items()))
