"""
Star Catalog Tools
==================

Load, generate, write and cone-query inertial star catalogs.

``cone_query`` uses the catalog's KD-tree for candidates and then applies
the same angular predicate as ``cone_query_linear``, so both return
identical results.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from src.models import CatalogStar, StarCatalog
from src.tools.geometry import angle_between

logger = logging.getLogger(__name__)

CATALOG_SEED_KEY = (2,)
"""SeedSequence spawn key of the synthetic-catalog stream"""


# ==================== CONVERSIONS ====================

def radec_to_vector(ra_deg, dec_deg) -> np.ndarray:
    """X = (cos d cos a, cos d sin a, sin d); accepts scalars or arrays"""
    a = np.radians(np.asarray(ra_deg, dtype=np.float64))
    d = np.radians(np.asarray(dec_deg, dtype=np.float64))
    return np.stack([np.cos(d) * np.cos(a), np.cos(d) * np.sin(a), np.sin(d)], axis=-1)


def vector_to_radec(v) -> np.ndarray:
    """Inverse of ``radec_to_vector``; RA in [0, 360)"""
    v = np.asarray(v, dtype=np.float64)
    ra = np.degrees(np.arctan2(v[..., 1], v[..., 0])) % 360.0
    ra = np.where(ra >= 360.0, 0.0, ra)
    dec = np.degrees(np.arcsin(np.clip(v[..., 2], -1.0, 1.0)))
    return np.stack([ra, dec], axis=-1)


# ==================== FILES ====================

def load_catalog(path: Union[str, Path]) -> StarCatalog:
    """
    Load a ``id,ra_deg,dec_deg,mag`` catalog file.

    Raises:
        CatalogParseError: malformed row or out-of-range coordinate (with line number)
        DuplicateStarError: repeated id
    """
    from src.parsers.catalog_parser import CatalogParser

    return CatalogParser().parse(Path(path))


def write_catalog(catalog: StarCatalog, path: Union[str, Path]) -> Path:
    from src.parsers.writers import write_catalog as _write

    return _write(catalog, Path(path))


# ==================== QUERIES ====================

def _validate_radius(radius_deg: float) -> float:
    if not 0.0 < radius_deg <= 90.0:
        raise ValueError(f"cone radius must be in (0, 90] degrees, got {radius_deg}")
    return np.radians(radius_deg)


def _order(catalog: StarCatalog, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    keys = np.lexsort((catalog.ids[rows], catalog.magnitudes[rows]))
    return rows[keys]


def cone_query_rows(
    catalog: StarCatalog,
    center,
    radius_deg: float,
    mag_limit: float = np.inf,
) -> np.ndarray:
    """Row indices of stars within ``radius_deg`` of ``center`` and at most ``mag_limit``"""
    radius = _validate_radius(radius_deg)
    if len(catalog) == 0:
        return np.zeros(0, dtype=np.int64)
    c = np.asarray(center, dtype=np.float64)
    c = c / np.linalg.norm(c)
    chord = 2.0 * np.sin(radius / 2.0) * (1.0 + 1e-9) + 1e-12
    candidates = np.asarray(catalog.tree.query_ball_point(c, chord), dtype=np.int64)
    if candidates.size == 0:
        return candidates
    keep = (angle_between(catalog.directions[candidates], c) <= radius) & (
        catalog.magnitudes[candidates] <= mag_limit
    )
    return _order(catalog, candidates[keep])


def cone_query(
    catalog: StarCatalog,
    center,
    radius_deg: float,
    mag_limit: float = np.inf,
) -> List[CatalogStar]:
    """Stars inside the cone, sorted by magnitude (then id)"""
    return [catalog.stars[r] for r in cone_query_rows(catalog, center, radius_deg, mag_limit)]


def cone_query_linear(
    catalog: StarCatalog,
    center,
    radius_deg: float,
    mag_limit: float = np.inf,
) -> List[CatalogStar]:
    """Reference exhaustive scan for ``cone_query``"""
    radius = _validate_radius(radius_deg)
    if len(catalog) == 0:
        return []
    c = np.asarray(center, dtype=np.float64)
    c = c / np.linalg.norm(c)
    keep = (angle_between(catalog.directions, c) <= radius) & (catalog.magnitudes <= mag_limit)
    rows = _order(catalog, np.nonzero(keep)[0])
    return [catalog.stars[r] for r in rows]


# ==================== SYNTHETIC CATALOG ====================

def generate_synthetic_catalog(
    n_stars: int,
    seed: int = 0,
    mag_min: float = 0.0,
    mag_max: float = 6.5,
    mag_slope: float = 0.45,
) -> StarCatalog:
    """
    Uniformly distributed stars with magnitude density proportional to 10^(slope m).

    Args:
        n_stars: number of stars (ids 1..n_stars)
        seed: seed of the catalog stream (independent of the simulator streams)
        mag_min, mag_max: magnitude range
        mag_slope: density slope; 0.45 roughly follows naked-eye star counts
    """
    if n_stars < 0:
        raise ValueError("n_stars must be non-negative")
    if mag_max < mag_min:
        raise ValueError("mag_max must not be below mag_min")

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=CATALOG_SEED_KEY))
    v = rng.standard_normal((n_stars, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)

    u = rng.random(n_stars)
    lo = 10.0 ** (mag_slope * mag_min)
    hi = 10.0 ** (mag_slope * mag_max)
    mags = np.log10(lo + u * (hi - lo)) / mag_slope

    logger.debug(f"Synthetic catalog: {n_stars} stars, magnitudes {mag_min}..{mag_max}")
    return StarCatalog.from_arrays(
        ids=np.arange(1, n_stars + 1),
        directions=v,
        magnitudes=mags,
        source=f"synthetic(n={n_stars}, seed={seed})",
    )


def catalog_from_config(catalog_config, seed: int) -> StarCatalog:
    """Load ``catalog.path`` or generate the synthetic catalog it describes"""
    if catalog_config.path is not None:
        return load_catalog(catalog_config.path)
    return generate_synthetic_catalog(
        catalog_config.n_stars,
        seed=seed,
        mag_min=catalog_config.mag_min,
        mag_max=catalog_config.mag_max,
        mag_slope=catalog_config.mag_slope,
    )
