"""
Report Parsers
==============

Parsers for the per-stage dumps written by ``esta track``: identification
report, extracted points, star tracks and refined star directions.
"""

from pathlib import Path
from typing import Dict, List

import numpy as np

from src.core.constants import (
    IDENTIFICATION_HEADER,
    IDENTIFICATION_STATUSES,
    POINTS_HEADER,
    STAR_DIRECTIONS_HEADER,
    TRACKS_HEADER,
)
from src.core.exceptions import FormatError
from src.models import Rotation
from src.parsers.base_parser import BaseParser


class IdentificationReportParser(BaseParser):
    """
    Rows of the identification report as dicts.

    ``rotation`` is None for frames that were not identified.
    """

    header = IDENTIFICATION_HEADER
    name = "identification"

    def parse(self, path: Path) -> List[Dict]:
        path = Path(path)
        rows: List[Dict] = []
        for line, fields in self._rows(path):
            status = fields[7]
            if status not in IDENTIFICATION_STATUSES:
                raise FormatError(f"unknown status '{status}'", path=str(path), line=line)
            rotation = None
            if all(fields[3:7]):
                q = [self._number(v, float, path, line, c) for v, c in zip(fields[3:7], self.header[3:7])]
                rotation = Rotation.from_quaternion(q)
            rows.append({
                "frame": self._number(fields[0], int, path, line, "frame"),
                "n_points": self._number(fields[1], int, path, line, "n_points"),
                "n_matched": self._number(fields[2], int, path, line, "n_matched"),
                "rotation": rotation,
                "status": status,
            })
        return rows


class PointsParser(BaseParser):
    """frame -> (N, 2) points"""

    header = POINTS_HEADER
    name = "points"

    def parse(self, path: Path) -> Dict[int, np.ndarray]:
        path = Path(path)
        points: Dict[int, List[List[float]]] = {}
        for line, (f, x, y) in self._rows(path):
            frame = self._number(f, int, path, line, "frame")
            points.setdefault(frame, []).append(
                [self._number(x, float, path, line, "x"), self._number(y, float, path, line, "y")]
            )
        return {f: np.array(p, dtype=np.float64) for f, p in sorted(points.items())}


class TracksParser(BaseParser):
    """track_id -> {frame: (x, y)}"""

    header = TRACKS_HEADER
    name = "tracks"

    def parse(self, path: Path) -> Dict[int, Dict[int, np.ndarray]]:
        path = Path(path)
        tracks: Dict[int, Dict[int, np.ndarray]] = {}
        for line, (tid, f, x, y) in self._rows(path):
            track = tracks.setdefault(self._number(tid, int, path, line, "track_id"), {})
            frame = self._number(f, int, path, line, "frame")
            if frame in track:
                raise FormatError(f"track {tid} observed twice in frame {frame}", path=str(path), line=line)
            track[frame] = np.array(
                [self._number(x, float, path, line, "x"), self._number(y, float, path, line, "y")]
            )
        return dict(sorted(tracks.items()))


class StarDirectionsParser(BaseParser):
    """track_id -> unit direction"""

    header = STAR_DIRECTIONS_HEADER
    name = "star_directions"

    def parse(self, path: Path) -> Dict[int, np.ndarray]:
        path = Path(path)
        out: Dict[int, np.ndarray] = {}
        for line, fields in self._rows(path):
            tid = self._number(fields[0], int, path, line, "track_id")
            out[tid] = np.array([self._number(v, float, path, line, c) for v, c in zip(fields[1:], "xyz")])
        return out
