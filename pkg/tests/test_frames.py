"""
Event Image Tests
=================

Window partition, distinct-timestamp counting, mean filter, APC and point
extraction.
"""

import logging

import numpy as np
import pytest

from src.models import EventImage, EventStream
from src.rules.frame_rules import apc_range, select_by_apc, selection_summary
from src.tools.frames import (
    apc,
    apc_values,
    build_event_images,
    extract_points,
    mean_filter,
    select_frames,
    to_pgm_bytes,
    window_bounds,
)
from src.tools.geometry import backproject_many


def _stream(events, width=20, height=10):
    t, x, y, p = (np.array(c) for c in zip(*events))
    return EventStream(width=width, height=height, t=t, x=x, y=y, p=p)


def _blob(width=30, height=20, cx=10, cy=5, value=9):
    counts = np.zeros((height, width), dtype=np.uint16)
    counts[cy - 1:cy + 2, cx - 1:cx + 2] = value
    return counts


# ==================== EVENT IMAGES ====================

def test_window_partition():
    assert window_bounds(0, 120000, 40.0) == [(0, 40000), (40000, 80000), (80000, 120000)]
    assert window_bounds(0, 100000, 40.0) == [(0, 40000), (40000, 80000)]


def test_event_belongs_to_half_open_window():
    stream = _stream([(0, 1, 1, 1), (39999, 2, 2, 0), (40000, 3, 3, 1)])
    images = build_event_images(stream, 0, 80000, 40.0)
    assert len(images) == 2
    assert images[0].counts.sum() == 2
    assert images[1].counts[3, 3] == 1


def test_same_pixel_and_timestamp_counts_once():
    stream = _stream([(10, 4, 2, 1), (10, 4, 2, 0), (11, 4, 2, 1)])
    image = build_event_images(stream, 0, 40000, 40.0)[0]
    assert image.counts[2, 4] == 2
    assert image.counts.dtype == np.uint16


def test_events_outside_recording_are_ignored():
    stream = _stream([(5, 0, 0, 1), (50000, 0, 0, 1)])
    images = build_event_images(stream, 0, 40000, 40.0)
    assert len(images) == 1
    assert images[0].counts.sum() == 1


def test_empty_stream_gives_empty_images():
    images = build_event_images(EventStream.empty(20, 10), 0, 80000, 40.0)
    assert len(images) == 2
    assert all(img.counts.sum() == 0 for img in images)
    assert images[1].index == 1 and images[1].t_start == 40000


def test_saturated_counts_are_clamped_and_reported(caplog):
    n = 70000
    stream = EventStream(
        width=4, height=3, t=np.arange(n), x=np.full(n, 1), y=np.full(n, 2), p=np.ones(n, dtype=np.int8)
    )
    with caplog.at_level(logging.WARNING):
        image = build_event_images(stream, 0, 100000, 100.0)[0]
    assert image.counts[2, 1] == 65535
    assert "saturated" in caplog.text


# ==================== FILTER & APC ====================

def test_mean_filter_uses_zero_padding_and_divides_by_nine():
    counts = np.zeros((5, 5))
    counts[0, 0] = 9
    filtered = mean_filter(counts)
    assert filtered[0, 0] == pytest.approx(1.0)
    assert filtered[1, 1] == pytest.approx(1.0)
    assert filtered[2, 2] == 0.0


def test_apc_counts_pixels_at_or_above_threshold():
    filtered = mean_filter(_blob())
    # 3x3 block of 9s filters to 9, 6, 4 inside and 3, 2, 1 on the ring around it
    assert apc(filtered, 4.0) == 9
    assert apc(filtered, 2.0) == 9 + 4 + 8
    with pytest.raises(ValueError):
        apc(filtered, 0.0)


def test_frame_selection_by_apc():
    images = [
        EventImage(index=0, t_start=0, t_end=1, counts=np.zeros((20, 30), dtype=np.uint16)),
        EventImage(index=1, t_start=1, t_end=2, counts=_blob()),
    ]
    values = apc_values(images, 2.0)
    assert values == [0, 21]
    assert select_frames(images, 2.0, 21) == [1]
    assert select_by_apc(values, 22) == []
    assert select_by_apc(values, 0) == [0, 1]


# ==================== POINT EXTRACTION ====================

def test_centroid_of_symmetric_blob(intrinsics):
    points = extract_points(mean_filter(_blob(cx=10, cy=5)), 2.0, intrinsics, frame=3)
    assert len(points) == 1
    assert points.frame == 3
    assert points.points[0] == pytest.approx([10.0, 5.0])
    assert np.allclose(points.rays, backproject_many(points.points, intrinsics))


def test_points_are_sorted_by_intensity(intrinsics):
    counts = _blob(cx=5, cy=5, value=3) + _blob(cx=20, cy=12, value=9)
    points = extract_points(mean_filter(counts), 1.0, intrinsics)
    assert len(points) == 2
    assert points.points[0] == pytest.approx([20.0, 12.0])
    assert points.intensities[0] > points.intensities[1]


def test_pixel_mode_returns_every_active_pixel(intrinsics):
    filtered = mean_filter(_blob())
    points = extract_points(filtered, 2.0, intrinsics, mode="pixels")
    assert len(points) == apc(filtered, 2.0)
    assert points.points[0] == pytest.approx([10.0, 5.0])


def test_empty_image_gives_empty_point_set(intrinsics):
    points = extract_points(np.zeros((20, 30)), 2.0, intrinsics, frame=4)
    assert len(points) == 0
    assert points.rays.shape == (0, 3)


def test_unknown_point_mode(intrinsics):
    with pytest.raises(ValueError):
        extract_points(mean_filter(_blob()), 2.0, intrinsics, mode="corners")


def test_pgm_header():
    image = EventImage(index=0, t_start=0, t_end=1, counts=_blob(value=300))
    data = to_pgm_bytes(image)
    assert data.startswith(b"P5\n30 20\n255\n")
    assert len(data) == len(b"P5\n30 20\n255\n") + 30 * 20
    assert max(data[len(b"P5\n30 20\n255\n"):]) == 255


def test_selection_summary():
    summary = selection_summary([0, 10, 50, 60], [2, 3])
    assert summary == {"n_frames": 4, "n_selected": 2, "apc_min": 0.0, "apc_max": 60.0, "apc_mean": 30.0}
    assert apc_range([]) == (0, 0)
    assert apc_range([7, 3, 9]) == (3, 9)


def test_points_do_not_depend_on_event_order(intrinsics, rng):
    n = 3000
    t = np.sort(rng.integers(0, 40000, size=n) // 200 * 200)
    x = np.clip(np.rint(rng.normal(15, 2, size=n)), 0, 29).astype(int)
    y = np.clip(np.rint(rng.normal(10, 2, size=n)), 0, 19).astype(int)
    p = rng.integers(0, 2, size=n)
    shuffled = np.lexsort((rng.random(n), t))

    points = []
    for order in (np.arange(n), shuffled):
        stream = EventStream(width=30, height=20, t=t[order], x=x[order], y=y[order], p=p[order])
        image = build_event_images(stream, 0, 40000, 40.0)[0]
        points.append(extract_points(mean_filter(image), 2.0, intrinsics))
    assert len(points[0]) > 0
    assert np.array_equal(points[0].points, points[1].points)
    assert np.array_equal(points[0].intensities, points[1].intensities)
