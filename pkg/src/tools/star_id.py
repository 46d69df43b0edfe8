"""
Star Identification
===================

Lost-in-space identification of event-image points against the catalog.

1. ``build_index``: thin the catalog to its brightest stars per half-FOV
   cone, enumerate every star triple whose pairwise separations fit in the
   field of view and hash it by its two shortest sides.
2. ``identify``: form triangles from the brightest image points, look up
   matching catalog triples, solve Wahba's problem per hypothesis and verify
   it by projecting the catalog into the image.
3. ``absolute_rotations``: run the above for every selected frame.
"""

import itertools
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from langsmith import traceable
from scipy.spatial import cKDTree

from src.core.config import StarIdConfig
from src.core.exceptions import DegenerateConfigurationError, IdentificationFailedError
from src.models import (
    Correspondence,
    EventImage,
    IdentificationResult,
    IntrinsicsLike,
    PointSet,
    Rotation,
    StarCatalog,
    TriangleHashIndex,
    intrinsics_matrix,
)
from src.rules.identification_rules import (
    accept_identification,
    false_match_probability,
    is_decisive,
    rejection_reason,
)
from src.tools.catalog import cone_query_rows
from src.tools.geometry import (
    angle_between,
    boresight,
    field_of_view_diagonal,
    field_of_view_radius,
    in_sensor,
    project_many,
)

logger = logging.getLogger(__name__)

_PERMUTATIONS = list(itertools.permutations(range(3)))


# ==================== WAHBA ====================

def solve_wahba(rays, directions, weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Rotation matrix R minimizing sum w ||x - R X||^2.

    Args:
        rays: (N, 3) observed unit vectors x (camera frame)
        directions: (N, 3) reference unit vectors X (inertial frame)
        weights: optional per-pair weights

    Raises:
        DegenerateConfigurationError: rank(B) < 2
    """
    x = np.asarray(rays, dtype=np.float64).reshape(-1, 3)
    X = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    if x.shape != X.shape:
        raise ValueError("rays and directions must have the same shape")
    if x.shape[0] < 2:
        raise DegenerateConfigurationError(f"Wahba needs at least 2 pairs, got {x.shape[0]}")
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=np.float64)

    B = (x * w[:, None]).T @ X
    U, s, Vt = np.linalg.svd(B)
    if s[0] <= 0.0 or s[1] <= 1e-10 * s[0]:
        raise DegenerateConfigurationError("reference directions are parallel (rank(B) < 2)")
    d = np.sign(np.linalg.det(U @ Vt)) or 1.0
    return U @ np.diag([1.0, 1.0, d]) @ Vt


def wahba_svd(correspondences: Sequence[Correspondence]) -> Rotation:
    """Attitude from 2D-3D correspondences (camera ray = R @ catalog direction)"""
    rays = np.array([c.ray for c in correspondences], dtype=np.float64)
    dirs = np.array([c.direction for c in correspondences], dtype=np.float64)
    return Rotation(matrix=solve_wahba(rays, dirs))


def wahba_cost(R, rays, directions) -> float:
    M = R.matrix if isinstance(R, Rotation) else np.asarray(R)
    r = np.asarray(rays) - np.asarray(directions) @ M.T
    return float(np.sum(r * r))


# ==================== INDEX ====================

def _sorted_sides(sides: np.ndarray, triples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sort each row of sides ascending and relabel vertices so vertex k is
    opposite side k. ``sides[:, k]`` must already be opposite ``triples[:, k]``.
    """
    order = np.argsort(sides, axis=1, kind="stable")
    return np.take_along_axis(sides, order, axis=1), np.take_along_axis(triples, order, axis=1)


def _thin(catalog: StarCatalog, rows: np.ndarray, radius: float, per_cone: int) -> np.ndarray:
    """Brightest-first greedy: keep a star while its cone holds fewer than ``per_cone`` kept stars"""
    dirs = catalog.directions
    cos_r = np.cos(radius)
    kept: List[int] = []
    kept_dirs = np.zeros((len(rows), 3))
    for r in rows:
        n = len(kept)
        if n and np.count_nonzero(kept_dirs[:n] @ dirs[r] >= cos_r) >= per_cone:
            continue
        kept_dirs[n] = dirs[r]
        kept.append(int(r))
    return np.array(kept, dtype=np.int64)


def build_index(
    catalog: StarCatalog,
    fov_deg: float,
    mag_limit: float,
    quantization_deg: float,
    stars_per_cone: int = 12,
) -> TriangleHashIndex:
    """
    Triangle hash over thinned catalog triples.

    Args:
        catalog: inertial catalog
        fov_deg: largest pairwise separation of an indexed triple
        mag_limit: faintest magnitude indexed
        quantization_deg: bin width q of the side descriptors
        stars_per_cone: brightest stars kept per cone of radius fov/2
    """
    if fov_deg <= 0 or quantization_deg <= 0:
        raise ValueError("fov and quantization must be positive")
    n_bins = int(np.ceil(fov_deg / quantization_deg)) + 1

    rows = np.nonzero(catalog.magnitudes <= mag_limit)[0] if len(catalog) else np.zeros(0, dtype=np.int64)
    rows = rows[np.lexsort((catalog.ids[rows], catalog.magnitudes[rows]))] if rows.size else rows
    kept = _thin(catalog, rows, np.radians(fov_deg / 2.0), stars_per_cone)

    triples_parts: List[np.ndarray] = []
    sides_parts: List[np.ndarray] = []
    if kept.size >= 3:
        dirs = catalog.directions[kept]
        ids = catalog.ids[kept]
        fov = np.radians(fov_deg)
        tree = cKDTree(dirs)
        chord = 2.0 * np.sin(fov / 2.0)
        neighbours = tree.query_ball_point(dirs, chord)
        for a in range(len(kept)):
            nb = np.array(sorted(n for n in neighbours[a] if n > a), dtype=np.int64)
            if nb.size < 2:
                continue
            d_ab = angle_between(dirs[nb], dirs[a])
            ok = d_ab <= fov
            nb, d_ab = nb[ok], d_ab[ok]
            if nb.size < 2:
                continue
            sep = angle_between(dirs[nb][:, None, :], dirs[nb][None, :, :])
            bi, ci = np.triu_indices(nb.size, k=1)
            ok = sep[bi, ci] <= fov
            bi, ci = bi[ok], ci[ok]
            if bi.size == 0:
                continue
            # side k is opposite vertex k: (a, b, c) -> (|bc|, |ac|, |ab|)
            sides = np.degrees(np.column_stack([sep[bi, ci], d_ab[ci], d_ab[bi]]))
            tri = np.column_stack([np.full(bi.size, ids[a]), ids[nb[bi]], ids[nb[ci]]])
            sides, tri = _sorted_sides(sides, tri)
            sides_parts.append(sides)
            triples_parts.append(tri)

    if sides_parts:
        sides = np.concatenate(sides_parts)
        triples = np.concatenate(triples_parts).astype(np.int64)
        keys = (np.floor(sides[:, 0] / quantization_deg).astype(np.int64) * n_bins
                + np.floor(sides[:, 1] / quantization_deg).astype(np.int64))
        order = np.lexsort((triples[:, 2], triples[:, 1], triples[:, 0], keys))
        keys, triples, sides = keys[order], triples[order], sides[order]
    else:
        keys = np.zeros(0, dtype=np.int64)
        triples = np.zeros((0, 3), dtype=np.int64)
        sides = np.zeros((0, 3))

    logger.info(
        f"📦 Triangle index: {kept.size} pattern stars, {len(keys)} triples, "
        f"{np.unique(keys).size} keys (q={quantization_deg} deg)"
    )
    return TriangleHashIndex(
        fov_deg=fov_deg,
        quantization_deg=quantization_deg,
        mag_limit=mag_limit,
        stars_per_cone=stars_per_cone,
        n_bins=n_bins,
        keys=keys,
        triples=triples,
        sides=sides,
        pattern_ids=np.sort(catalog.ids[kept]) if kept.size else np.zeros(0, dtype=np.int64),
    )


def build_index_for_camera(
    catalog: StarCatalog,
    K: IntrinsicsLike,
    width: int,
    height: int,
    config: StarIdConfig,
) -> TriangleHashIndex:
    fov_deg = float(np.degrees(field_of_view_diagonal(K, width, height)))
    return build_index(catalog, fov_deg, config.mag_limit, config.quantization_deg, config.stars_per_cone)


# ==================== VERIFICATION ====================

class _Verification:
    __slots__ = ("R", "pairs", "n_projected", "probability")

    def __init__(self, R: np.ndarray, pairs: List[Tuple[int, int]], n_projected: int, probability: float):
        self.R = R
        self.pairs = pairs  # (point index, catalog row)
        self.n_projected = n_projected
        self.probability = probability

    @property
    def n_matched(self) -> int:
        return len(self.pairs)


def _match_projection(
    R: np.ndarray,
    points: PointSet,
    point_tree: cKDTree,
    catalog: StarCatalog,
    K: IntrinsicsLike,
    width: int,
    height: int,
    fov_radius_deg: float,
    config: StarIdConfig,
) -> Tuple[List[Tuple[int, int]], int]:
    """Greedy one-to-one matching of projected catalog stars to image points"""
    rows = cone_query_rows(catalog, boresight(R), min(90.0, fov_radius_deg), config.mag_limit)
    if rows.size == 0:
        return [], 0
    pixels, front = project_many(K, R, catalog.directions[rows])
    inside = front & in_sensor(pixels, width, height)
    rows, pixels = rows[inside], pixels[inside]
    if rows.size == 0:
        return [], 0

    k = min(3, len(points))
    dist, idx = point_tree.query(pixels, k=k, distance_upper_bound=config.verify_radius_px)
    dist = dist.reshape(len(rows), k)
    idx = idx.reshape(len(rows), k)
    cand = [
        (float(dist[s, n]), int(idx[s, n]), s)
        for s in range(len(rows))
        for n in range(k)
        if np.isfinite(dist[s, n])
    ]
    cand.sort()
    used_points, used_stars = set(), set()
    pairs: List[Tuple[int, int]] = []
    for _, p, s in cand:
        if p in used_points or s in used_stars:
            continue
        used_points.add(p)
        used_stars.add(s)
        pairs.append((p, int(rows[s])))
    pairs.sort()
    return pairs, int(rows.size)


def _verify(
    R: np.ndarray,
    points: PointSet,
    point_tree: cKDTree,
    catalog: StarCatalog,
    K: IntrinsicsLike,
    width: int,
    height: int,
    fov_radius_deg: float,
    config: StarIdConfig,
) -> _Verification:
    pairs, n_projected = _match_projection(
        R, points, point_tree, catalog, K, width, height, fov_radius_deg, config
    )
    p = false_match_probability(
        len(pairs), len(points), n_projected, config.verify_radius_px, width, height
    )
    return _Verification(R, pairs, n_projected, p)


# ==================== IDENTIFICATION ====================

def _triangle_sides(rays: np.ndarray, tri: Tuple[int, int, int]) -> np.ndarray:
    a, b, c = (rays[t] for t in tri)
    return np.degrees(np.array([angle_between(b, c), angle_between(a, c), angle_between(a, b)]))


def _candidate_rows(index: TriangleHashIndex, s0: float, s1: float) -> np.ndarray:
    q = index.quantization_deg
    b0, b1 = int(np.floor(s0 / q)), int(np.floor(s1 / q))
    parts = []
    for d0 in (-1, 0, 1):
        for d1 in (-1, 0, 1):
            if b0 + d0 < 0 or b1 + d1 < 0:
                continue
            sl = index.bucket((b0 + d0) * index.n_bins + (b1 + d1))
            if sl.stop > sl.start:
                parts.append(np.arange(sl.start, sl.stop))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def _better(a: Optional[_Verification], b: _Verification) -> bool:
    if a is None:
        return True
    if b.n_matched != a.n_matched:
        return b.n_matched > a.n_matched
    return b.probability < a.probability


def identify_frame(
    points: PointSet,
    index: TriangleHashIndex,
    K: IntrinsicsLike,
    catalog: StarCatalog,
    config: Optional[StarIdConfig] = None,
    width: Optional[int] = None,
    height: Optional[int] = None,
) -> IdentificationResult:
    """
    Hypothesize-and-verify identification of one point set.

    Never raises on failure; the result's status is ``failed`` with a reason.

    Raises:
        ValueError: fewer than 3 points
    """
    config = config or StarIdConfig()
    if len(points) < 3:
        raise ValueError(f"identification needs at least 3 points, got {len(points)}")
    width = width or points.width
    height = height or points.height
    if width is None or height is None:
        raise ValueError("sensor size unknown: pass width and height")

    fx = float(intrinsics_matrix(K)[0, 0])
    fit_tol = config.verify_radius_px / fx
    q = index.quantization_deg
    fov_radius_deg = float(np.degrees(field_of_view_radius(K, width, height)))
    point_tree = cKDTree(points.points)
    rays = points.rays
    ids = catalog.ids

    n_top = min(config.n_brightest, len(points))
    best: Optional[_Verification] = None
    tried = 0
    done = False

    for tri in itertools.combinations(range(n_top), 3):
        img_sides = _triangle_sides(rays, tri)
        order = np.argsort(img_sides, kind="stable")
        img_sides = img_sides[order]
        tri = tuple(tri[k] for k in order)
        rows = _candidate_rows(index, img_sides[0], img_sides[1])
        if rows.size == 0:
            continue
        cand_sides = index.sides[rows]
        for perm in _PERMUTATIONS:
            ok = np.all(np.abs(cand_sides[:, list(perm)] - img_sides) <= q, axis=1)
            for r in rows[ok]:
                star_rows = [catalog.index_of(int(index.triples[r, perm[k]])) for k in range(3)]
                x = rays[list(tri)]
                X = catalog.directions[star_rows]
                try:
                    R = solve_wahba(x, X)
                except DegenerateConfigurationError:
                    continue
                if np.max(angle_between(X @ R.T, x)) > fit_tol:
                    continue
                tried += 1
                hyp = _verify(R, points, point_tree, catalog, K, width, height, fov_radius_deg, config)
                if _better(best, hyp):
                    best = hyp
                if is_decisive(hyp.probability, config.early_exit_probability) and (
                    hyp.n_matched >= config.min_matches
                ):
                    done = True
                if done or tried >= config.max_hypotheses:
                    break
            if done or tried >= config.max_hypotheses:
                break
        if done or tried >= config.max_hypotheses:
            break

    if best is None or not accept_identification(
        best.n_matched, best.probability, config.min_matches, config.max_false_match_probability
    ):
        reason = (
            "no triangle matched the index"
            if best is None
            else rejection_reason(
                best.n_matched, best.probability, config.min_matches, config.max_false_match_probability
            )
        )
        return IdentificationResult(
            frame=points.frame,
            n_points=len(points),
            status="failed",
            false_match_probability=None if best is None else best.probability,
            hypotheses_tried=tried,
            reason=reason,
        )

    # refine on every match, then re-match once
    final = best
    for _ in range(2):
        p_idx = [p for p, _ in final.pairs]
        s_rows = [s for _, s in final.pairs]
        R = solve_wahba(rays[p_idx], catalog.directions[s_rows])
        refined = _verify(R, points, point_tree, catalog, K, width, height, fov_radius_deg, config)
        if refined.n_matched < final.n_matched:
            break
        final = refined

    correspondences = [
        Correspondence(
            point_index=int(p),
            point=points.points[p],
            ray=rays[p],
            star_id=int(ids[s]),
            direction=catalog.directions[s],
        )
        for p, s in final.pairs
    ]
    return IdentificationResult(
        frame=points.frame,
        n_points=len(points),
        status="identified",
        correspondences=correspondences,
        rotation=wahba_svd(correspondences),
        false_match_probability=final.probability,
        hypotheses_tried=tried,
    )


def identify(
    points: PointSet,
    index: TriangleHashIndex,
    K: IntrinsicsLike,
    catalog: StarCatalog,
    config: Optional[StarIdConfig] = None,
    width: Optional[int] = None,
    height: Optional[int] = None,
) -> List[Correspondence]:
    """
    Verified correspondences of one frame.

    Raises:
        ValueError: fewer than 3 points
        IdentificationFailedError: no hypothesis passed verification
    """
    result = identify_frame(points, index, K, catalog, config, width, height)
    if result.status != "identified":
        raise IdentificationFailedError(f"frame {points.frame}: {result.reason}")
    return result.correspondences


# ==================== ABSOLUTE ROTATIONS ====================

@traceable(name="identify_frames")
def identify_frames(
    point_sets: Dict[int, PointSet],
    selected: Sequence[int],
    index: TriangleHashIndex,
    K: IntrinsicsLike,
    catalog: StarCatalog,
    config: Optional[StarIdConfig] = None,
) -> Dict[int, IdentificationResult]:
    """Identification result of every selected frame (``skipped`` under 3 points)"""
    config = config or StarIdConfig()
    results: Dict[int, IdentificationResult] = {}
    for i in selected:
        ps = point_sets[i]
        if len(ps) < 3:
            results[i] = IdentificationResult(
                frame=i, n_points=len(ps), status="skipped", reason=f"{len(ps)} points (< 3)"
            )
            continue
        results[i] = identify_frame(ps, index, K, catalog, config)
        if results[i].status != "identified":
            logger.debug(f"Frame {i} not identified: {results[i].reason}")
    return results


def identified_rotations(results: Dict[int, IdentificationResult]) -> Dict[int, Rotation]:
    """Absolute rotations of the identified frames; failed and skipped frames are left out"""
    return {i: r.rotation for i, r in sorted(results.items()) if r.status == "identified"}


def absolute_rotations(
    images: Sequence[EventImage],
    selected: Sequence[int],
    index: TriangleHashIndex,
    K: IntrinsicsLike,
    catalog: StarCatalog,
    eps1: float = 2.0,
    config: Optional[StarIdConfig] = None,
    mode: str = "centroids",
) -> Dict[int, Rotation]:
    """
    Absolute rotations of the selected frames that identify.

    Frames that fail are left out of the returned map.
    """
    from src.tools.frames import extract_points, mean_filter

    by_index = {img.index: img for img in images}
    point_sets = {
        i: extract_points(mean_filter(by_index[i]), eps1, K, frame=i, mode=mode) for i in selected
    }
    rotations = identified_rotations(identify_frames(point_sets, selected, index, K, catalog, config))
    if selected and not rotations:
        logger.warning("⚠️  No selected frame could be identified")
    return rotations
