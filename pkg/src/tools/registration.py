"""
Point-Set Registration
======================

Relative rotations between nearby event images by trimmed ICP on unit
rays, plus the star tracks obtained from the associations it produces.

Convention: R_ji maps rays of frame i (source) onto rays of frame j
(target), x_j ~= R_ji x_i, with j < i.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from langsmith import traceable
from scipy.spatial import cKDTree

from src.core.config import RegistrationConfig
from src.core.exceptions import DegenerateConfigurationError, RegistrationFailedError
from src.models import IntrinsicsLike, PointSet, RelativeRotation, Rotation, StarTrack, intrinsics_matrix
from src.rules.registration_rules import accept_relative_rotation
from src.tools.geometry import angular_error, as_matrix
from src.tools.star_id import solve_wahba

logger = logging.getLogger(__name__)

RaysLike = Union[PointSet, np.ndarray]


def _rays(points: RaysLike) -> np.ndarray:
    return points.rays if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64).reshape(-1, 3)


def _frame(points: RaysLike, default: int) -> int:
    return points.frame if isinstance(points, PointSet) else default


def kept_count(n_source: int, trim: float) -> int:
    """L = ceil(trim * P)"""
    return int(math.ceil(trim * n_source - 1e-12))


# ==================== TRIMMED ICP ====================

def trimmed_icp(
    source: RaysLike,
    target: RaysLike,
    trim: float = 0.7,
    R_init=None,
    max_iterations: int = 50,
    tolerance_rad: float = 1e-6,
) -> RelativeRotation:
    """
    Rotation aligning ``source`` rays onto ``target`` rays.

    Each iteration assigns every rotated source ray to its nearest target
    ray, keeps the L smallest chordal residuals and re-solves Wahba's
    problem on the kept pairs. The trimmed objective (sum of squared kept
    residuals) never increases.

    Raises:
        ValueError: fewer than 3 rays on either side, trim outside (0, 1] or L < 3
        RegistrationFailedError: kept pairs do not constrain a rotation
    """
    src = _rays(source)
    tgt = _rays(target)
    if len(src) < 3 or len(tgt) < 3:
        raise ValueError(f"trimmed ICP needs >= 3 rays per side, got {len(src)} and {len(tgt)}")
    if not 0.0 < trim <= 1.0:
        raise ValueError(f"trim fraction must be in (0, 1], got {trim}")
    L = kept_count(len(src), trim)
    if L < 3:
        raise ValueError(f"trim {trim} keeps only {L} of {len(src)} pairs")

    R = np.eye(3) if R_init is None else as_matrix(R_init).copy()
    tree = cKDTree(tgt)
    history: List[float] = []
    iterations = 0

    def assign(Rm: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        d, nn = tree.query(src @ Rm.T)
        keep = np.argsort(d, kind="stable")[:L]
        return d, nn, keep, float(np.sum(d[keep] ** 2))

    d, nn, keep, objective = assign(R)
    history.append(objective)

    while objective > 0.0 and iterations < max_iterations:
        try:
            R_new = solve_wahba(tgt[nn[keep]], src[keep])
        except DegenerateConfigurationError as e:
            raise RegistrationFailedError(f"degenerate kept set: {e}") from e
        iterations += 1
        update = angular_error(R_new, R)
        d_new, nn_new, keep_new, obj_new = assign(R_new)
        if obj_new > objective:
            # nearest-neighbour ties can flip; hold the previous estimate
            break
        R, d, nn, keep, objective = R_new, d_new, nn_new, keep_new, obj_new
        history.append(objective)
        if np.radians(update) < tolerance_rad:
            break

    inliers = sorted((int(s), int(nn[s])) for s in keep)
    j = _frame(target, 0)
    i = _frame(source, 1)
    return RelativeRotation(
        j=j,
        i=i,
        rotation=_as_rotation(R_init) if R_init is not None and iterations == 0 else Rotation(matrix=R),
        residual=objective,
        rms_residual=math.sqrt(objective / L),
        inliers=inliers,
        iterations=iterations,
        objective_history=history,
    )


def _as_rotation(R) -> Rotation:
    return R if isinstance(R, Rotation) else Rotation(matrix=as_matrix(R))


# ==================== RELATIVE ROTATIONS ====================

def _warm_start(
    accepted: Dict[Tuple[int, int], Rotation],
    j: int,
    i: int,
) -> Rotation:
    """
    Seed for (j, i): the previous consecutive rotation for neighbours,
    otherwise the composition R_{j,i-1} R_{i-1,i}.
    """
    if i - j == 1:
        prev = accepted.get((i - 2, i - 1))
        return prev if prev is not None else Rotation.identity()
    left = accepted.get((j, i - 1))
    right = accepted.get((i - 1, i))
    if left is not None and right is not None:
        return left @ right
    return Rotation.identity()


@traceable(name="relative_rotations")
def relative_rotations(
    point_sets: Sequence[PointSet],
    window: int = 5,
    trim: float = 0.7,
    K: Optional[IntrinsicsLike] = None,
    config: Optional[RegistrationConfig] = None,
) -> List[RelativeRotation]:
    """
    Trimmed ICP over every pair 0 < i - j <= window.

    Pairs are solved in order of i, then gap; each seeds from already
    accepted neighbours. Pairs that fail or miss the residual gate (when
    ``K`` is given) are left out of the graph.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    config = config or RegistrationConfig(window=window, trim_fraction=trim)
    fx = float(intrinsics_matrix(K)[0, 0]) if K is not None else None

    by_frame = {ps.frame: ps for ps in point_sets}
    frames = sorted(by_frame)
    accepted: Dict[Tuple[int, int], Rotation] = {}
    results: List[RelativeRotation] = []
    skipped = 0
    rejected = 0

    for i in frames:
        for gap in range(1, window + 1):
            j = i - gap
            if j not in by_frame:
                continue
            src, tgt = by_frame[i], by_frame[j]
            if len(src) < 3 or len(tgt) < 3 or kept_count(len(src), trim) < 3:
                skipped += 1
                continue
            try:
                rel = trimmed_icp(
                    src,
                    tgt,
                    trim=trim,
                    R_init=_warm_start(accepted, j, i),
                    max_iterations=config.max_iterations,
                    tolerance_rad=config.tolerance_rad,
                )
            except RegistrationFailedError as e:
                logger.debug(f"Pair ({j}, {i}) failed: {e}")
                rejected += 1
                continue
            if fx is not None:
                ok, reason = accept_relative_rotation(rel, fx, config.max_rms_residual_px)
                if not ok:
                    logger.debug(f"Pair ({j}, {i}) rejected: {reason}")
                    rejected += 1
                    continue
            accepted[(j, i)] = rel.rotation
            results.append(rel)

    logger.info(
        f"🔗 {len(results)} relative rotations ({skipped} pairs without enough points, "
        f"{rejected} rejected)"
    )
    return results


# ==================== STAR TRACKS ====================

class _UnionFind:
    """Union-find over (frame, point) nodes that refuses joins putting two points of one frame together"""

    def __init__(self):
        self.parent: Dict[Tuple[int, int], Tuple[int, int]] = {}
        self.members: Dict[Tuple[int, int], Dict[int, int]] = {}

    def find(self, node: Tuple[int, int]) -> Tuple[int, int]:
        if node not in self.parent:
            self.parent[node] = node
            self.members[node] = {node[0]: node[1]}
            return node
        root = node
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[node] != root:
            self.parent[node], node = root, self.parent[node]
        return root

    def union(self, a: Tuple[int, int], b: Tuple[int, int]) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        ma, mb = self.members[ra], self.members[rb]
        if any(f in ma and ma[f] != p for f, p in mb.items()):
            return False
        if ra > rb:
            ra, rb = rb, ra
            ma, mb = mb, ma
        self.parent[rb] = ra
        ma.update(mb)
        del self.members[rb]
        return True


def build_tracks(relative: Sequence[RelativeRotation]) -> List[StarTrack]:
    """
    Tracks from the inlier pairs of consecutive-frame relative rotations.

    Joins are applied in frame order; a join that would put two points of
    one frame into the same track is dropped.
    """
    consecutive = sorted((r for r in relative if r.i - r.j == 1), key=lambda r: r.i)
    uf = _UnionFind()
    dropped = 0
    for rel in consecutive:
        for src_idx, tgt_idx in sorted(rel.inliers):
            if not uf.union((rel.j, tgt_idx), (rel.i, src_idx)):
                dropped += 1

    components = [dict(sorted(m.items())) for m in uf.members.values() if len(m) >= 2]
    components.sort(key=lambda m: next(iter(m.items())))
    tracks = [StarTrack(track_id=k, observations=m) for k, m in enumerate(components)]
    if dropped:
        logger.debug(f"Dropped {dropped} conflicting track joins")
    logger.info(f"🧵 {len(tracks)} star tracks")
    return tracks
