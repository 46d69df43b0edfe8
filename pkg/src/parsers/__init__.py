"""
ESTA Parsers
============

Readers for every ESTA text format, selected by header, plus the writers.
"""

from src.parsers.base_parser import BaseParser
from src.parsers.catalog_parser import CatalogParser
from src.parsers.event_parser import EventParser
from src.parsers.attitude_parser import AttitudeParser, RelativeRotationParser
from src.parsers.calibration_parser import (
    HomographyPairsParser,
    IntrinsicsParser,
    ProjectionPairsParser,
)
from src.parsers.report_parser import (
    IdentificationReportParser,
    PointsParser,
    StarDirectionsParser,
    TracksParser,
)
from src.parsers.parser_factory import ParserFactory, get_parser_factory

__all__ = [
    "BaseParser",
    "CatalogParser",
    "EventParser",
    "AttitudeParser",
    "RelativeRotationParser",
    "HomographyPairsParser",
    "IntrinsicsParser",
    "ProjectionPairsParser",
    "IdentificationReportParser",
    "PointsParser",
    "StarDirectionsParser",
    "TracksParser",
    "ParserFactory",
    "get_parser_factory",
]
