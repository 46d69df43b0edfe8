"""
Simulator Tests
===============

Trajectory model, window bounds and the synthetic event stream.
"""

import numpy as np
import pytest

from src.core.config import SimulationConfig
from src.models import Rotation, StarCatalog
from src.tools.catalog import generate_synthetic_catalog
from src.tools.geometry import angular_error
from src.tools.simulator import (
    NO_STARS_WARNING,
    frame_ground_truth,
    frame_window_bounds,
    make_trajectory,
    simulate_events,
)


@pytest.fixture(scope="module")
def catalog():
    return generate_synthetic_catalog(5000, seed=0)


# ==================== TRAJECTORY ====================

def test_trajectory_starts_at_initial_attitude():
    config = SimulationConfig(duration_s=2.0, initial_attitude=[1.0, 0.0, 0.0, 0.0])
    traj = make_trajectory(config, [0.0, 1.0, 2.0])
    assert angular_error(traj.rotations[0], Rotation.identity()) < 1e-9
    assert angular_error(traj.rotations[1], traj.rotations[0]) == pytest.approx(4.0, abs=1e-9)
    assert angular_error(traj.rotations[2], traj.rotations[0]) == pytest.approx(8.0, abs=1e-9)


def test_trajectory_samples_match_closed_form():
    config = SimulationConfig(duration_s=3.0)
    traj = make_trajectory(config, [0.5, 2.5], seed=4)
    for t, R in zip(traj.times, traj.rotations):
        assert angular_error(traj.at(t), R) < 1e-9


def test_initial_attitude_is_seeded():
    config = SimulationConfig(duration_s=1.0)
    a = make_trajectory(config, [0.0], seed=1).initial_attitude
    b = make_trajectory(config, [0.0], seed=1).initial_attitude
    c = make_trajectory(config, [0.0], seed=2).initial_attitude
    assert a == b
    assert angular_error(a, c) > 1e-3


def test_time_outside_recording_is_rejected():
    config = SimulationConfig(duration_s=1.0)
    with pytest.raises(ValueError):
        make_trajectory(config, [1.5])
    with pytest.raises(ValueError):
        make_trajectory(config, [-0.1])


# ==================== WINDOWS ====================

def test_window_counts():
    assert len(frame_window_bounds(45.0, 40.0)) == 1125
    assert len(frame_window_bounds(1.0, 40.0)) == 25
    assert frame_window_bounds(1.0, 40.0)[0] == (0, 40000)


def test_partial_trailing_window_is_dropped():
    bounds = frame_window_bounds(0.1, 40.0)
    assert bounds == [(0, 40000), (40000, 80000)]


def test_frame_ground_truth_is_at_window_midpoints():
    config = SimulationConfig(duration_s=1.0)
    truth = frame_ground_truth(config, 40.0, seed=5)
    assert sorted(truth) == list(range(25))
    traj = make_trajectory(config, [0.02, 0.98], seed=5)
    assert angular_error(truth[0], traj.rotations[0]) < 1e-9
    assert angular_error(truth[24], traj.rotations[1]) < 1e-9


# ==================== EVENTS ====================

def test_simulation_is_deterministic(catalog):
    config = SimulationConfig(duration_s=0.5)
    a, _ = simulate_events(catalog, config, seed=7)
    b, _ = simulate_events(catalog, config, seed=7)
    c, _ = simulate_events(catalog, config, seed=8)
    for field in ("t", "x", "y", "p"):
        assert np.array_equal(getattr(a, field), getattr(b, field))
    assert a.metadata == b.metadata
    assert len(a) != len(c) or not np.array_equal(a.t, c.t)


def test_events_are_sorted_and_on_sensor(catalog):
    config = SimulationConfig(duration_s=0.5)
    stream, _ = simulate_events(catalog, config, seed=1)
    assert len(stream) > 0
    assert np.all(np.diff(stream.t) >= 0)
    assert stream.t.min() >= 0 and stream.t.max() < 500000
    assert np.all((stream.x >= 0) & (stream.x < 240))
    assert np.all((stream.y >= 0) & (stream.y < 180))
    assert set(np.unique(stream.p)) <= {0, 1}
    counts = stream.metadata["source_counts"]
    assert sum(counts.values()) == len(stream)
    assert counts["star"] > 0


def test_noise_free_stream_has_only_star_events(catalog):
    config = SimulationConfig(duration_s=0.5, noise_rate=0.0, hot_pixel_count=0)
    stream, _ = simulate_events(catalog, config, seed=3)
    counts = stream.metadata["source_counts"]
    assert counts["noise"] == 0 and counts["hot_pixel"] == 0
    assert counts["star"] == len(stream) > 0


def test_empty_catalog_warns_and_keeps_noise():
    config = SimulationConfig(duration_s=0.5)
    stream, _ = simulate_events(StarCatalog(stars=[]), config, seed=0)
    assert NO_STARS_WARNING in stream.metadata["warnings"]
    assert stream.metadata["source_counts"]["star"] == 0
    assert len(stream) > 0


def test_hot_pixels_fire_at_fixed_locations():
    config = SimulationConfig(duration_s=1.0, noise_rate=0.0, hot_pixel_count=3, hot_pixel_rate=50.0)
    stream, _ = simulate_events(StarCatalog(stars=[]), config, seed=2)
    pixels = set(zip(stream.x.tolist(), stream.y.tolist()))
    assert 0 < len(pixels) <= 3
    assert pixels <= {tuple(h) for h in stream.metadata["hot_pixels"]}


def test_stationary_camera_produces_no_star_events(catalog):
    config = SimulationConfig(duration_s=0.5, angular_speed_dps=0.0, noise_rate=0.0, hot_pixel_count=0)
    stream, _ = simulate_events(catalog, config, seed=0)
    assert len(stream) == 0


def test_trajectory_at_window_midpoints(catalog):
    config = SimulationConfig(duration_s=0.4)
    _, traj = simulate_events(catalog, config, seed=0, frame_integration_ms=40.0)
    assert len(traj.rotations) == 10
    assert traj.times[0] == pytest.approx(0.02)


def test_query_block_span_does_not_change_the_stream(catalog):
    base = SimulationConfig(duration_s=2.0)
    a, _ = simulate_events(catalog, base.model_copy(update={"block_s": 1.0}), seed=4)
    b, _ = simulate_events(catalog, base.model_copy(update={"block_s": 0.5}), seed=4)
    c, _ = simulate_events(catalog, base.model_copy(update={"block_s": 0.3}), seed=4)
    for other in (b, c):
        for field in ("t", "x", "y", "p"):
            assert np.array_equal(getattr(a, field), getattr(other, field))


def test_star_polarity_follows_position_on_the_trail(catalog):
    config = SimulationConfig(duration_s=1.0, jitter_px=0.0, noise_rate=0.0, hot_pixel_count=0)
    stream, _ = simulate_events(catalog, config, seed=0)
    assert len(stream) > 0
    assert 0.4 < float(np.mean(stream.p)) < 0.6
    # 1 ms substeps: the second half of every substep is the leading half of the trail
    assert np.array_equal(stream.p == 1, (stream.t % 1000) >= 500)


# ==================== SPURIOUS EVENTS ====================

def test_spurious_event_count_is_poisson():
    config = SimulationConfig(duration_s=2.0, hot_pixel_count=0)
    stream, _ = simulate_events(StarCatalog(stars=[]), config, seed=6)
    expected = config.noise_rate * config.width * config.height * config.duration_s
    assert abs(len(stream) - expected) < 3.0 * np.sqrt(expected)


def test_doubling_noise_rate_doubles_spurious_events():
    config = SimulationConfig(duration_s=2.0, hot_pixel_count=0)
    single, _ = simulate_events(StarCatalog(stars=[]), config, seed=6)
    double, _ = simulate_events(
        StarCatalog(stars=[]), config.model_copy(update={"noise_rate": 2.0 * config.noise_rate}), seed=6
    )
    assert len(double) / len(single) == pytest.approx(2.0, rel=0.05)
