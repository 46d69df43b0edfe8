"""
Writers
=======

Text writers for every ESTA file format. Floats are written with 17
significant digits so files round-trip exactly and identical runs produce
identical bytes.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.constants import (
    ATTITUDE_HEADER,
    AVERAGING_LOG_HEADER,
    BUNDLE_LOG_HEADER,
    CATALOG_HEADER,
    EULER_HEADER,
    EVENTS_HEADER,
    FLOAT_FORMAT,
    HOMOGRAPHY_PAIRS_HEADER,
    IDENTIFICATION_HEADER,
    INTRINSICS_HEADER,
    POINTS_HEADER,
    PROJECTION_PAIRS_HEADER,
    RELATIVE_HEADER,
    STAR_DIRECTIONS_HEADER,
    TRACKS_HEADER,
)
from src.models import (
    BAIteration,
    CalibSolution,
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


def fmt(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def _write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")
    return path


def _quaternion(R: Rotation) -> List[str]:
    return [fmt(v) for v in R.as_quaternion()]


# ==================== INPUTS ====================

def write_catalog(catalog: StarCatalog, path: Path) -> Path:
    from src.tools.catalog import vector_to_radec

    radec = vector_to_radec(catalog.directions) if len(catalog) else np.zeros((0, 2))
    rows = (
        [str(int(i)), fmt(ra), fmt(dec), fmt(m)]
        for i, (ra, dec), m in zip(catalog.ids, radec.reshape(-1, 2), catalog.magnitudes)
    )
    return _write_table(path, CATALOG_HEADER, rows)


def write_events(stream: EventStream, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([stream.t, stream.x, stream.y, stream.p]).astype(np.int64)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(EVENTS_HEADER) + "\n")
        if len(data):
            np.savetxt(f, data, fmt="%d", delimiter=",")
    return path


def write_homography_pairs(src, dst, path: Path) -> Path:
    rows = ([fmt(a), fmt(b), fmt(c), fmt(d)] for (a, b), (c, d) in zip(np.asarray(src), np.asarray(dst)))
    return _write_table(path, HOMOGRAPHY_PAIRS_HEADER, rows)


def write_projection_pairs(pixels, directions, path: Path) -> Path:
    rows = (
        [fmt(u), fmt(v), fmt(X), fmt(Y), fmt(Z)]
        for (u, v), (X, Y, Z) in zip(np.asarray(pixels), np.asarray(directions))
    )
    return _write_table(path, PROJECTION_PAIRS_HEADER, rows)


def write_intrinsics(K: Intrinsics, path: Path) -> Path:
    return _write_table(path, INTRINSICS_HEADER, [[fmt(K.fx), fmt(K.fy), fmt(K.cx), fmt(K.cy), fmt(K.skew)]])


# ==================== ATTITUDES ====================

def write_attitudes(attitudes: Mapping[int, Rotation], path: Path) -> Path:
    rows = ([str(int(f))] + _quaternion(R) for f, R in sorted(attitudes.items()))
    return _write_table(path, ATTITUDE_HEADER, rows)


def write_euler(attitudes: Mapping[int, Rotation], path: Path) -> Path:
    from src.tools.geometry import rotation_to_euler

    rows = (
        [str(int(f))] + [fmt(v) for v in rotation_to_euler(R)] for f, R in sorted(attitudes.items())
    )
    return _write_table(path, EULER_HEADER, rows)


def write_relative(relative: Sequence[RelativeRotation], path: Path) -> Path:
    rows = (
        [str(r.j), str(r.i)] + _quaternion(r.rotation) + [fmt(r.residual), str(len(r.inliers))]
        for r in sorted(relative, key=lambda r: (r.j, r.i))
    )
    return _write_table(path, RELATIVE_HEADER, rows)


# ==================== MEASUREMENTS ====================

def write_identification(results: Mapping[int, IdentificationResult], path: Path) -> Path:
    def row(res: IdentificationResult) -> List[str]:
        q = _quaternion(res.rotation) if res.rotation is not None else ["", "", "", ""]
        return [str(res.frame), str(res.n_points), str(res.n_matched)] + q + [res.status]

    return _write_table(path, IDENTIFICATION_HEADER, (row(r) for _, r in sorted(results.items())))


def write_points(point_sets: Iterable[PointSet], path: Path) -> Path:
    rows = (
        [str(ps.frame), fmt(x), fmt(y)]
        for ps in sorted(point_sets, key=lambda p: p.frame)
        for x, y in ps.points
    )
    return _write_table(path, POINTS_HEADER, rows)


def write_tracks(tracks: Sequence[StarTrack], point_sets: Mapping[int, PointSet], path: Path) -> Path:
    rows = (
        [str(t.track_id), str(f), fmt(point_sets[f].points[p][0]), fmt(point_sets[f].points[p][1])]
        for t in tracks
        for f, p in t.observations.items()
    )
    return _write_table(path, TRACKS_HEADER, rows)


def write_star_directions(directions: Mapping[int, np.ndarray], path: Path) -> Path:
    rows = ([str(s)] + [fmt(v) for v in d] for s, d in sorted(directions.items()))
    return _write_table(path, STAR_DIRECTIONS_HEADER, rows)


# ==================== LOGS ====================

def write_averaging_log(log: Sequence[Mapping[str, float]], path: Path) -> Path:
    rows = ([str(int(e["iter"])), fmt(e["objective"]), fmt(e["max_update"])] for e in log)
    return _write_table(path, AVERAGING_LOG_HEADER, rows)


def write_bundle_log(log: Sequence[BAIteration], path: Path) -> Path:
    rows = ([str(e.iter), fmt(e.cost), fmt(e.lam), "1" if e.accepted else "0"] for e in log)
    return _write_table(path, BUNDLE_LOG_HEADER, rows)


def write_per_frame_errors(per_frame: Mapping[str, Mapping[int, float]], path: Path) -> Path:
    """One column per method; frames a method does not cover are left empty"""
    methods = list(per_frame)
    frames = sorted({f for errs in per_frame.values() for f in errs})
    rows = (
        [str(f)] + [fmt(per_frame[m][f]) if f in per_frame[m] else "" for m in methods]
        for f in frames
    )
    return _write_table(path, ["frame_index"] + [f"{m}_error_deg" for m in methods], rows)


def _json_default(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_json(data: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


# ==================== DEBUG / CALIBRATION ====================

def write_pgm(image: EventImage, directory: Path) -> Path:
    from src.tools.frames import to_pgm_bytes

    path = Path(directory) / f"frame_{image.index:05d}.pgm"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_pgm_bytes(image))
    return path


def write_calibration(solution: CalibSolution, path: Path) -> Path:
    """Text block: each matrix as three comma-separated rows under a ``[name]`` line"""

    def block(name: str, M: np.ndarray) -> List[str]:
        return [f"[{name}]"] + [",".join(fmt(v) for v in row) for row in np.asarray(M)]

    lines: List[str] = []
    lines += block("K", solution.K)
    lines += block("H_sc", solution.H_sc)
    lines += block("K_te", solution.K_te.matrix)
    lines += block("R", solution.R.matrix)
    lines += block("K_ev", solution.K_ev.matrix)
    lines.append("[residuals]")
    lines.append(f"homography_rms_px,{fmt(solution.homography_rms_px)}")
    lines.append(f"projection_rms_px,{fmt(solution.projection_rms_px)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
