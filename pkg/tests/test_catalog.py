"""
Catalog Tests
=============

RA/Dec conversion, catalog files, cone search and the synthetic catalog.
"""

import numpy as np
import pytest

from src.core.exceptions import CatalogParseError, DuplicateStarError
from src.models import CatalogStar, StarCatalog
from src.tools.catalog import (
    cone_query,
    cone_query_linear,
    generate_synthetic_catalog,
    load_catalog,
    radec_to_vector,
    vector_to_radec,
    write_catalog,
)
from tests.conftest import random_unit_vectors


def _write(path, rows):
    path.write_text("id,ra_deg,dec_deg,mag\n" + "".join(r + "\n" for r in rows), encoding="utf-8")
    return path


# ==================== CONVERSIONS ====================

def test_radec_axes():
    assert np.allclose(radec_to_vector(0.0, 0.0), [1.0, 0.0, 0.0])
    assert np.allclose(radec_to_vector(90.0, 0.0), [0.0, 1.0, 0.0])
    assert np.allclose(radec_to_vector(123.0, 90.0), [0.0, 0.0, 1.0])


def test_radec_round_trip(rng):
    v = random_unit_vectors(rng, 200)
    radec = vector_to_radec(v)
    assert np.all((radec[:, 0] >= 0.0) & (radec[:, 0] < 360.0))
    assert np.allclose(radec_to_vector(radec[:, 0], radec[:, 1]), v, atol=1e-12)


# ==================== FILES ====================

def test_load_catalog_sorts_by_id(tmp_path):
    path = _write(tmp_path / "cat.csv", ["7,10.0,20.0,3.5", "2,0.0,-90.0,1.0", "5,359.5,0.0,6.0"])
    catalog = load_catalog(path)
    assert list(catalog.ids) == [2, 5, 7]
    assert np.allclose(np.linalg.norm(catalog.directions, axis=1), 1.0, atol=1e-12)
    assert catalog.source == str(path)


def test_catalog_round_trips_through_writer(tmp_path):
    catalog = generate_synthetic_catalog(50, seed=3)
    path = write_catalog(catalog, tmp_path / "cat.csv")
    again = load_catalog(path)
    assert np.array_equal(again.ids, catalog.ids)
    assert np.allclose(again.directions, catalog.directions, atol=1e-12)
    assert np.array_equal(again.magnitudes, catalog.magnitudes)


def test_out_of_range_declination_names_the_line(tmp_path):
    path = _write(tmp_path / "cat.csv", ["1,10.0,20.0,3.5", "2,10.0,91.0,3.5"])
    with pytest.raises(CatalogParseError) as exc:
        load_catalog(path)
    assert exc.value.line == 3


def test_right_ascension_of_360_is_rejected(tmp_path):
    path = _write(tmp_path / "cat.csv", ["1,360.0,0.0,3.5"])
    with pytest.raises(CatalogParseError):
        load_catalog(path)


def test_duplicate_id_is_rejected(tmp_path):
    path = _write(tmp_path / "cat.csv", ["1,10.0,20.0,3.5", "1,11.0,21.0,4.5"])
    with pytest.raises(DuplicateStarError):
        load_catalog(path)


def test_duplicate_id_in_model_is_rejected():
    star = CatalogStar(id=1, direction=[1.0, 0.0, 0.0], magnitude=1.0)
    with pytest.raises(DuplicateStarError):
        StarCatalog(stars=[star, star])


def test_unreadable_number_is_a_parse_error(tmp_path):
    path = _write(tmp_path / "cat.csv", ["1,abc,20.0,3.5"])
    with pytest.raises(CatalogParseError):
        load_catalog(path)


# ==================== CONE SEARCH ====================

def test_cone_query_matches_linear_scan(rng):
    catalog = generate_synthetic_catalog(3000, seed=1)
    for center in random_unit_vectors(rng, 20):
        fast = [s.id for s in cone_query(catalog, center, 10.0, mag_limit=5.5)]
        slow = [s.id for s in cone_query_linear(catalog, center, 10.0, mag_limit=5.5)]
        assert fast == slow


def test_cone_query_is_sorted_by_magnitude():
    catalog = generate_synthetic_catalog(3000, seed=2)
    stars = cone_query(catalog, [0.0, 0.0, 1.0], 20.0)
    mags = [s.magnitude for s in stars]
    assert mags == sorted(mags)


def test_cone_query_on_empty_catalog():
    assert cone_query(StarCatalog(stars=[]), [1.0, 0.0, 0.0], 5.0) == []


def test_cone_radius_out_of_range():
    catalog = generate_synthetic_catalog(10, seed=0)
    with pytest.raises(ValueError):
        cone_query(catalog, [1.0, 0.0, 0.0], 0.0)
    with pytest.raises(ValueError):
        cone_query(catalog, [1.0, 0.0, 0.0], 91.0)


# ==================== SYNTHETIC CATALOG ====================

def test_synthetic_catalog_is_deterministic():
    a = generate_synthetic_catalog(500, seed=9)
    b = generate_synthetic_catalog(500, seed=9)
    c = generate_synthetic_catalog(500, seed=10)
    assert np.array_equal(a.directions, b.directions)
    assert np.array_equal(a.magnitudes, b.magnitudes)
    assert not np.array_equal(a.directions, c.directions)


def test_synthetic_magnitudes_favour_faint_stars():
    catalog = generate_synthetic_catalog(5000, seed=4, mag_min=0.0, mag_max=6.5)
    mags = catalog.magnitudes
    assert mags.min() >= 0.0 and mags.max() <= 6.5
    assert np.sum(mags > 5.5) > np.sum(mags < 1.0)
