"""
Attitude Parsers
================

Parsers for per-frame attitudes (``frame_index,qw,qx,qy,qz``) and relative
rotations (``j,i,qw,qx,qy,qz,residual,n_inliers``).
"""

from pathlib import Path
from typing import Dict, Tuple

from src.core.constants import ATTITUDE_HEADER, RELATIVE_HEADER
from src.core.exceptions import FormatError, InvalidRotationError
from src.models import RelativeRotation, Rotation
from src.parsers.base_parser import BaseParser


class AttitudeParser(BaseParser):
    """Reads an attitude file into {frame: Rotation}"""

    header = ATTITUDE_HEADER
    name = "attitude"

    def parse(self, path: Path) -> Dict[int, Rotation]:
        path = Path(path)
        attitudes: Dict[int, Rotation] = {}
        for line, fields in self._rows(path):
            frame = self._number(fields[0], int, path, line, "frame_index")
            q = [self._number(v, float, path, line, c) for v, c in zip(fields[1:], self.header[1:])]
            if frame in attitudes:
                raise FormatError(f"frame {frame} listed twice", path=str(path), line=line)
            try:
                attitudes[frame] = Rotation.from_quaternion(q)
            except InvalidRotationError as e:
                raise FormatError(str(e), path=str(path), line=line) from e
        return dict(sorted(attitudes.items()))


class RelativeRotationParser(BaseParser):
    """Reads a relative-rotation dump into {(j, i): RelativeRotation} (inlier lists are not stored)"""

    header = RELATIVE_HEADER
    name = "relative"

    def parse(self, path: Path) -> Dict[Tuple[int, int], RelativeRotation]:
        path = Path(path)
        out: Dict[Tuple[int, int], RelativeRotation] = {}
        for line, fields in self._rows(path):
            j = self._number(fields[0], int, path, line, "j")
            i = self._number(fields[1], int, path, line, "i")
            q = [self._number(v, float, path, line, c) for v, c in zip(fields[2:6], self.header[2:6])]
            residual = self._number(fields[6], float, path, line, "residual")
            self._number(fields[7], int, path, line, "n_inliers")
            if not j < i:
                raise FormatError(f"pair ({j}, {i}) must satisfy j < i", path=str(path), line=line)
            try:
                R = Rotation.from_quaternion(q)
            except InvalidRotationError as e:
                raise FormatError(str(e), path=str(path), line=line) from e
            out[(j, i)] = RelativeRotation(j=j, i=i, rotation=R, residual=residual)
        return dict(sorted(out.items()))
