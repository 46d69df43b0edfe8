"""
Event Parser
============

Parser for event streams: ``t_us,x,y,p``.
"""

from pathlib import Path
from typing import Optional

import numpy as np

from src.core.constants import EVENTS_HEADER
from src.core.exceptions import FormatError
from src.models import EventStream
from src.parsers.base_parser import BaseParser


class EventParser(BaseParser):
    """
    Reads an event file into an ``EventStream``.

    The sensor size is not stored in the file; it defaults to the configured
    simulation sensor.
    """

    header = EVENTS_HEADER
    name = "events"

    def __init__(self, width: Optional[int] = None, height: Optional[int] = None):
        self.width = width
        self.height = height

    def parse(self, path: Path) -> EventStream:
        path = Path(path)
        self._check_header(path)
        width, height = self.width, self.height
        if width is None or height is None:
            from src.core.config import get_config

            sim = get_config().simulation
            width, height = width or sim.width, height or sim.height

        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
        except ValueError as e:
            raise FormatError(f"malformed event row: {e}", path=str(path)) from e
        if data.size == 0:
            return EventStream.empty(width, height)
        if data.shape[1] != 4:
            raise FormatError(f"expected 4 columns, found {data.shape[1]}", path=str(path))

        t, x, y, p = data.T
        bad = np.nonzero((p != 0) & (p != 1))[0]
        if bad.size:
            raise FormatError(f"polarity must be 0 or 1, found {p[bad[0]]}", path=str(path), line=int(bad[0]) + 2)
        try:
            return EventStream(width=width, height=height, t=t, x=x, y=y, p=p)
        except ValueError as e:
            raise FormatError(str(e), path=str(path)) from e
