"""
Catalog Parser
==============

Parser for star catalogs: ``id,ra_deg,dec_deg,mag``.
"""

import math
from pathlib import Path
from typing import List

from src.core.constants import CATALOG_HEADER
from src.core.exceptions import CatalogParseError, DuplicateStarError
from src.models import CatalogStar, StarCatalog
from src.parsers.base_parser import BaseParser
from src.tools.catalog import radec_to_vector


class CatalogParser(BaseParser):
    """
    Reads a catalog file into a ``StarCatalog``.

    Right ascension must lie in [0, 360) and declination in [-90, 90];
    ids must be unique.
    """

    header = CATALOG_HEADER
    name = "catalog"
    error_class = CatalogParseError

    def parse(self, path: Path) -> StarCatalog:
        path = Path(path)
        stars: List[CatalogStar] = []
        seen = {}
        for line, (sid, ra, dec, mag) in self._rows(path):
            star_id = self._number(sid, int, path, line, "id")
            ra_deg = self._number(ra, float, path, line, "ra_deg")
            dec_deg = self._number(dec, float, path, line, "dec_deg")
            magnitude = self._number(mag, float, path, line, "mag")
            if not (0.0 <= ra_deg < 360.0):
                raise CatalogParseError(f"ra_deg {ra_deg} outside [0, 360)", path=str(path), line=line)
            if not (-90.0 <= dec_deg <= 90.0):
                raise CatalogParseError(f"dec_deg {dec_deg} outside [-90, 90]", path=str(path), line=line)
            if not math.isfinite(magnitude):
                raise CatalogParseError(f"magnitude {mag} is not finite", path=str(path), line=line)
            if star_id in seen:
                raise DuplicateStarError(
                    f"star id {star_id} already defined on line {seen[star_id]}", path=str(path), line=line
                )
            seen[star_id] = line
            stars.append(
                CatalogStar(id=star_id, direction=radec_to_vector(ra_deg, dec_deg), magnitude=magnitude)
            )
        return StarCatalog(stars=stars, source=str(path))
