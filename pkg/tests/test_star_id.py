"""
Star Identification Tests
=========================

Wahba solver, triangle index construction, hypothesize-and-verify
identification and the acceptance rules.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation as ScipyRotation

from src.core.config import StarIdConfig
from src.core.exceptions import DegenerateConfigurationError, IdentificationFailedError
from src.models import Correspondence, EventImage, Intrinsics, PointSet
from src.rules.identification_rules import (
    accept_identification,
    false_match_probability,
    rejection_reason,
)
from src.tools.catalog import generate_synthetic_catalog
from src.tools.geometry import (
    angle_between,
    angular_error,
    backproject_many,
    field_of_view_diagonal,
    in_sensor,
    project_many,
)
from src.tools.star_id import (
    absolute_rotations,
    build_index,
    build_index_for_camera,
    identify,
    identify_frame,
    identify_frames,
    solve_wahba,
    wahba_cost,
    wahba_svd,
)
from tests.conftest import random_rotation, random_unit_vectors

WIDTH, HEIGHT = 240, 180


@pytest.fixture(scope="module")
def catalog():
    return generate_synthetic_catalog(5000, seed=7)


@pytest.fixture(scope="module")
def index(catalog):
    K = Intrinsics.from_fov(WIDTH, HEIGHT, 20.0)
    return build_index_for_camera(catalog, K, WIDTH, HEIGHT, StarIdConfig())


def observed_frame(catalog, R, K, frame=0, mag_limit=6.0) -> PointSet:
    """Noise-free point set: every catalog star in view, brightest first"""
    rows = np.nonzero(catalog.magnitudes <= mag_limit)[0]
    pixels, front = project_many(K, R, catalog.directions[rows])
    inside = front & in_sensor(pixels, WIDTH, HEIGHT)
    rows, pixels = rows[inside], pixels[inside]
    order = np.argsort(catalog.magnitudes[rows], kind="stable")
    rows, pixels = rows[order], pixels[order]
    return PointSet(
        frame=frame,
        points=pixels,
        intensities=10.0 ** (-0.4 * catalog.magnitudes[rows]),
        rays=backproject_many(pixels, K),
        width=WIDTH,
        height=HEIGHT,
    )


# ==================== WAHBA ====================

def test_wahba_recovers_rotation(rng):
    R = random_rotation(rng)
    X = random_unit_vectors(rng, 10)
    x = X @ R.matrix.T
    assert np.allclose(solve_wahba(x, X), R.matrix, atol=1e-10)


def test_wahba_two_vectors_suffice(rng):
    R = random_rotation(rng)
    X = random_unit_vectors(rng, 2)
    assert np.allclose(solve_wahba(X @ R.matrix.T, X), R.matrix, atol=1e-9)


def test_wahba_returns_proper_rotation(rng):
    X = random_unit_vectors(rng, 6)
    x = random_unit_vectors(rng, 6)
    M = solve_wahba(x, X)
    assert np.allclose(M @ M.T, np.eye(3), atol=1e-10)
    assert np.linalg.det(M) == pytest.approx(1.0)


def test_wahba_rejects_parallel_directions():
    X = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    with pytest.raises(DegenerateConfigurationError):
        solve_wahba(X, X)
    with pytest.raises(DegenerateConfigurationError):
        solve_wahba(X[:1], X[:1])


def test_wahba_beats_random_rotations_on_noisy_data(rng):
    for _ in range(100):
        R = random_rotation(rng)
        X = random_unit_vectors(rng, 20)
        x = X @ R.matrix.T + rng.normal(scale=1e-3, size=(20, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        best = wahba_cost(solve_wahba(x, X), x, X)

        # cost = sum |x|^2 + |X|^2 - 2 tr(Q^T B) for any rotation Q
        B = x.T @ X
        uniform = ScipyRotation.random(2000, random_state=rng).as_matrix()
        nearby = (
            ScipyRotation.from_rotvec(rng.normal(scale=np.radians(0.5), size=(2000, 3))).as_matrix()
            @ R.matrix
        )
        trials = np.concatenate([uniform, nearby])
        costs = np.sum(x * x) + np.sum(X * X) - 2.0 * np.einsum("kij,ij->k", trials, B)
        assert best <= costs.min() + 1e-12


def _correspondences(rng, R, n):
    X = random_unit_vectors(rng, n)
    return [
        Correspondence(point_index=k, point=np.zeros(2), ray=R.matrix @ X[k], star_id=k, direction=X[k])
        for k in range(n)
    ]


def test_wahba_svd_ignores_order_and_exact_duplicates(rng):
    R = random_rotation(rng)
    pairs = _correspondences(rng, R, 8)
    solved = wahba_svd(pairs)
    assert angular_error(solved, R) < 1e-9
    assert angular_error(wahba_svd(pairs[::-1]), solved) < 1e-9
    assert angular_error(wahba_svd(pairs + pairs[:2]), solved) < 1e-9


# ==================== INDEX ====================

def test_index_triples_fit_in_field_of_view(catalog):
    index = build_index(catalog, fov_deg=15.0, mag_limit=5.0, quantization_deg=0.25, stars_per_cone=8)
    assert len(index) > 0
    assert np.all(np.diff(index.keys) >= 0)
    assert np.all(np.diff(index.sides, axis=1) >= 0)
    assert np.all(index.sides <= 15.0 + 1e-9)
    assert set(np.unique(index.triples)) <= set(index.pattern_ids.tolist())


def test_index_vertex_is_opposite_its_side(catalog):
    index = build_index(catalog, fov_deg=15.0, mag_limit=5.0, quantization_deg=0.25, stars_per_cone=8)
    for r in range(0, len(index), max(1, len(index) // 25)):
        dirs = [catalog.directions[catalog.index_of(int(s))] for s in index.triples[r]]
        for k in range(3):
            a, b = (dirs[m] for m in range(3) if m != k)
            assert np.degrees(angle_between(a, b)) == pytest.approx(index.sides[r, k], abs=1e-9)
        assert index.key_of(index.sides[r, 0], index.sides[r, 1]) == index.keys[r]


def test_index_respects_magnitude_limit(catalog):
    index = build_index(catalog, fov_deg=15.0, mag_limit=3.0, quantization_deg=0.25)
    mags = catalog.magnitudes[[catalog.index_of(int(s)) for s in index.pattern_ids]]
    assert np.all(mags <= 3.0)


def test_index_of_empty_catalog_is_empty():
    index = build_index(generate_synthetic_catalog(0), fov_deg=15.0, mag_limit=6.0, quantization_deg=0.2)
    assert len(index) == 0
    assert index.lookup(0) == []


def test_camera_index_uses_diagonal_field_of_view(index, intrinsics):
    fov = np.degrees(field_of_view_diagonal(intrinsics, WIDTH, HEIGHT))
    assert index.fov_deg == pytest.approx(fov)


# ==================== IDENTIFICATION ====================

def test_noise_free_frames_identify_exactly(catalog, index, intrinsics, rng):
    identified = 0
    for frame in range(6):
        R = random_rotation(rng)
        points = observed_frame(catalog, R, intrinsics, frame=frame)
        if len(points) < 3:
            continue
        result = identify_frame(points, index, intrinsics, catalog)
        if result.status == "identified":
            identified += 1
            assert result.frame == frame
            assert angular_error(result.rotation, R) < 1e-6
            for c in result.correspondences:
                assert np.allclose(c.direction, catalog.directions[catalog.index_of(c.star_id)])
    assert identified >= 4


def test_identify_returns_verified_correspondences(catalog, index, intrinsics, rng):
    for _ in range(10):
        R = random_rotation(rng)
        points = observed_frame(catalog, R, intrinsics)
        if len(points) < 8:
            continue
        result = identify_frame(points, index, intrinsics, catalog)
        if result.status != "identified":
            continue
        correspondences = identify(points, index, intrinsics, catalog)
        assert len(correspondences) >= StarIdConfig().min_matches
        indices = [c.point_index for c in correspondences]
        assert len(set(indices)) == len(indices)
        assert result.false_match_probability <= StarIdConfig().max_false_match_probability
        return
    pytest.fail("no dense frame identified")


def test_random_points_fail_identification(catalog, index, intrinsics, rng):
    pixels = rng.uniform([0, 0], [WIDTH - 1, HEIGHT - 1], size=(25, 2))
    points = PointSet(
        frame=2,
        points=pixels,
        intensities=np.linspace(25, 1, 25),
        rays=backproject_many(pixels, intrinsics),
        width=WIDTH,
        height=HEIGHT,
    )
    result = identify_frame(points, index, intrinsics, catalog)
    assert result.status == "failed"
    assert result.rotation is None
    assert result.reason
    with pytest.raises(IdentificationFailedError):
        identify(points, index, intrinsics, catalog)


def test_too_few_points(catalog, index, intrinsics):
    pixels = np.array([[10.0, 10.0], [50.0, 40.0]])
    points = PointSet(
        frame=5,
        points=pixels,
        intensities=np.ones(2),
        rays=backproject_many(pixels, intrinsics),
        width=WIDTH,
        height=HEIGHT,
    )
    with pytest.raises(ValueError):
        identify_frame(points, index, intrinsics, catalog)
    results = identify_frames({5: points}, [5], index, intrinsics, catalog)
    assert results[5].status == "skipped"


def rendered_frame(catalog, R, K, frame) -> EventImage:
    """Event image with one bright pixel per visible star"""
    counts = np.zeros((HEIGHT, WIDTH), dtype=np.uint16)
    pixels = np.rint(observed_frame(catalog, R, K).points).astype(int)
    counts[pixels[:, 1], pixels[:, 0]] = 30
    return EventImage(index=frame, t_start=40000 * frame, t_end=40000 * (frame + 1), counts=counts)


def test_absolute_rotations_drop_a_corrupted_frame(catalog, index, intrinsics, rng):
    truth = {k: random_rotation(rng) for k in range(8)}
    images = [rendered_frame(catalog, R, intrinsics, k) for k, R in truth.items()]
    clean = absolute_rotations(images, sorted(truth), index, intrinsics, catalog)
    assert len(clean) >= 3
    for k, R in clean.items():
        assert angular_error(R, truth[k]) < 0.1

    bad = min(clean)
    shuffled = rng.permutation(images[bad].counts.ravel()).reshape(HEIGHT, WIDTH)
    images[bad] = images[bad].model_copy(update={"counts": shuffled})
    corrupted = absolute_rotations(images, sorted(truth), index, intrinsics, catalog)

    assert bad not in corrupted
    assert sorted(corrupted) == sorted(set(clean) - {bad})
    for k, R in corrupted.items():
        assert np.array_equal(R.matrix, clean[k].matrix)


# ==================== ACCEPTANCE RULES ====================

def test_false_match_probability_without_extras_is_one():
    assert false_match_probability(3, 20, 15, 2.0, WIDTH, HEIGHT) == 1.0
    assert false_match_probability(5, 3, 15, 2.0, WIDTH, HEIGHT) == 1.0


def test_false_match_probability_drops_with_more_matches():
    p = [false_match_probability(m, 20, 15, 2.0, WIDTH, HEIGHT) for m in (4, 6, 10)]
    assert 0.0 < p[2] < p[1] < p[0] < 1.0


def test_acceptance_decision():
    assert accept_identification(5, 1e-9, 4, 1e-6)
    assert not accept_identification(3, 1e-9, 4, 1e-6)
    assert not accept_identification(8, 1e-3, 4, 1e-6)
    assert "matched 3" in rejection_reason(3, 1e-9, 4, 1e-6)
    assert "exceeds" in rejection_reason(8, 1e-3, 4, 1e-6)
