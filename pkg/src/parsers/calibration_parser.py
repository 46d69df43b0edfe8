"""
Calibration Parsers
===================

Parsers for the calibration inputs:
- 2D-2D pairs ``u,v,u2,v2`` (screen pixel -> event pixel)
- 2D-3D pairs ``u,v,X,Y,Z`` (screen pixel <- unit direction)
- intrinsics ``fx,fy,cx,cy,skew`` (single row)
"""

from pathlib import Path
from typing import Tuple

import numpy as np

from src.core.constants import HOMOGRAPHY_PAIRS_HEADER, INTRINSICS_HEADER, PROJECTION_PAIRS_HEADER
from src.core.exceptions import FormatError, InvalidIntrinsicsError
from src.models import Intrinsics
from src.parsers.base_parser import BaseParser


def _float_rows(parser: BaseParser, path: Path) -> np.ndarray:
    rows = [
        [parser._number(v, float, path, line, c) for v, c in zip(fields, parser.header)]
        for line, fields in parser._rows(path)
    ]
    return np.array(rows, dtype=np.float64).reshape(-1, len(parser.header))


class HomographyPairsParser(BaseParser):
    """Returns (source points (N, 2), destination points (N, 2))"""

    header = HOMOGRAPHY_PAIRS_HEADER
    name = "homography_pairs"

    def parse(self, path: Path) -> Tuple[np.ndarray, np.ndarray]:
        data = _float_rows(self, Path(path))
        return data[:, 0:2], data[:, 2:4]


class ProjectionPairsParser(BaseParser):
    """Returns (pixels (N, 2), unit directions (N, 3))"""

    header = PROJECTION_PAIRS_HEADER
    name = "projection_pairs"

    def parse(self, path: Path) -> Tuple[np.ndarray, np.ndarray]:
        path = Path(path)
        data = _float_rows(self, path)
        dirs = data[:, 2:5]
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0.0):
            line = int(np.nonzero(norms == 0.0)[0][0]) + 2
            raise FormatError("zero direction vector", path=str(path), line=line)
        return data[:, 0:2], dirs / norms[:, None]


class IntrinsicsParser(BaseParser):
    """Returns the ``Intrinsics`` on the file's single data row"""

    header = INTRINSICS_HEADER
    name = "intrinsics"

    def parse(self, path: Path) -> Intrinsics:
        path = Path(path)
        data = _float_rows(self, path)
        if data.shape[0] != 1:
            raise FormatError(f"expected exactly one intrinsics row, found {data.shape[0]}", path=str(path))
        fx, fy, cx, cy, skew = data[0]
        try:
            return Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy, skew=skew)
        except InvalidIntrinsicsError as e:
            raise FormatError(str(e), path=str(path), line=2) from e
