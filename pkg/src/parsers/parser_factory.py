"""
Parser Factory
==============

Selects the parser for a file from its header line.
"""

from pathlib import Path
from typing import Any, List, Optional, Tuple

from src.parsers.attitude_parser import AttitudeParser, RelativeRotationParser
from src.parsers.base_parser import BaseParser
from src.parsers.calibration_parser import (
    HomographyPairsParser,
    IntrinsicsParser,
    ProjectionPairsParser,
)
from src.parsers.catalog_parser import CatalogParser
from src.parsers.event_parser import EventParser
from src.parsers.report_parser import (
    IdentificationReportParser,
    PointsParser,
    StarDirectionsParser,
    TracksParser,
)


class ParserFactory:
    """
    Factory for selecting and executing the parser of a file.
    """

    def __init__(self):
        """One instance of every ESTA format parser, in detection order"""
        self.parsers: List[BaseParser] = [
            CatalogParser(),
            EventParser(),
            AttitudeParser(),
            RelativeRotationParser(),
            IdentificationReportParser(),
            PointsParser(),
            TracksParser(),
            StarDirectionsParser(),
            HomographyPairsParser(),
            ProjectionPairsParser(),
            IntrinsicsParser(),
        ]

    def get_parser(self, path: Path) -> Optional[BaseParser]:
        """
        Get the parser whose header matches the file.

        Returns:
            Parser instance, or None if no parser recognizes the header
        """
        for parser in self.parsers:
            if parser.can_parse(Path(path)):
                return parser
        return None

    def parse(self, path: Path) -> Tuple[bool, str, Any]:
        """
        Parse a file with the matching parser.

        Returns:
            (success, error_message, result)
            - success: the file was recognized, validated and parsed
            - error_message: why it was not (empty on success)
            - result: parsed object (None on failure)
        """
        path = Path(path)
        if not path.is_file():
            return False, f"{path} does not exist", None

        parser = self.get_parser(path)
        if parser is None:
            header = BaseParser._read_header(path)
            return False, f"No parser found for header '{','.join(header or [])}'", None

        is_valid, error = parser.validate(path)
        if not is_valid:
            return False, f"Validation failed: {error}", None

        try:
            return True, "", parser.parse(path)
        except ValueError as e:
            return False, f"Parsing failed: {e}", None


# Shared instance
_parser_factory: Optional[ParserFactory] = None


def get_parser_factory() -> ParserFactory:
    """
    Process-wide ParserFactory, built on first use.

    Returns:
        ParserFactory instance
    """
    global _parser_factory

    if _parser_factory is None:
        _parser_factory = ParserFactory()

    return _parser_factory
