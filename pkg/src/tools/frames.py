"""
Event Image Tools
=================

Turn an event stream into uniformly partitioned event images, mean-filter
them, count active pixels and extract the discrete point sets fed to star
identification and registration.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage

from src.models import EventImage, EventStream, IntrinsicsLike, PointSet
from src.tools.geometry import backproject_many

logger = logging.getLogger(__name__)

_KERNEL = np.ones((3, 3))
COUNT_MAX = int(np.iinfo(np.uint16).max)
_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


# ==================== EVENT IMAGES ====================

def window_bounds(t_start: int, t_end: int, integration_ms: float) -> List[tuple]:
    """
    Half-open windows [a, b) in microseconds covering [t_start, t_end).

    A trailing partial window is dropped with a warning.
    """
    window_us = int(round(integration_ms * 1e3))
    if window_us <= 0:
        raise ValueError("integration time must be positive")
    span = int(t_end) - int(t_start)
    if span <= 0:
        return []
    n, rest = divmod(span, window_us)
    if rest:
        logger.warning(
            f"⚠️  Recording span {span} us is not a multiple of {window_us} us; "
            f"dropping the last {rest} us"
        )
    return [(t_start + k * window_us, t_start + (k + 1) * window_us) for k in range(n)]


def build_event_images(
    events: EventStream,
    t_start: int,
    t_end: int,
    integration_ms: float,
) -> List[EventImage]:
    """
    Count distinct event timestamps per pixel in every window.

    An event at t belongs to window i iff t lies in [start_i, end_i).
    Polarity is ignored.
    """
    bounds = window_bounds(t_start, t_end, integration_ms)
    W, H = events.width, events.height
    images: List[EventImage] = []

    if not bounds:
        return images

    starts = np.array([a for a, _ in bounds], dtype=np.int64)
    lo = np.searchsorted(events.t, starts, side="left")
    hi = np.searchsorted(events.t, starts + (bounds[0][1] - bounds[0][0]), side="left")

    for k, (a, b) in enumerate(bounds):
        sl = slice(int(lo[k]), int(hi[k]))
        pix = events.y[sl].astype(np.int64) * W + events.x[sl].astype(np.int64)
        if pix.size:
            # events sharing a pixel and a timestamp count once
            pairs = np.unique(np.column_stack([pix, events.t[sl]]), axis=0)
            counts = np.bincount(pairs[:, 0], minlength=W * H)
        else:
            counts = np.zeros(W * H, dtype=np.int64)
        saturated = int(np.count_nonzero(counts > COUNT_MAX))
        if saturated:
            logger.warning(f"⚠️  Frame {k}: {saturated} pixels saturated at {COUNT_MAX} events")
        counts = np.minimum(counts, COUNT_MAX).astype(np.uint16)
        images.append(EventImage(index=k, t_start=a, t_end=b, counts=counts.reshape(H, W)))

    logger.debug(f"Built {len(images)} event images of {W}x{H}")
    return images


# ==================== FILTERING ====================

def mean_filter(image) -> np.ndarray:
    """3x3 box average with zero padding, always normalized by 9"""
    counts = image.counts if isinstance(image, EventImage) else np.asarray(image)
    return ndimage.convolve(counts.astype(np.float64), _KERNEL, mode="constant", cval=0.0) / 9.0


def apc(filtered: np.ndarray, eps1: float) -> int:
    """Active pixel count: pixels with filtered value >= eps1"""
    if eps1 <= 0:
        raise ValueError("eps1 must be positive")
    return int(np.count_nonzero(np.asarray(filtered) >= eps1))


def apc_values(images: Sequence[EventImage], eps1: float) -> List[int]:
    return [apc(mean_filter(img), eps1) for img in images]


def select_frames(images: Sequence[EventImage], eps1: float, eps2: int) -> List[int]:
    """Ascending indices of frames whose APC reaches eps2"""
    from src.rules.frame_rules import select_by_apc

    return select_by_apc(apc_values(images, eps1), eps2)


# ==================== POINT EXTRACTION ====================

def _sorted_points(
    frame: int,
    xy: np.ndarray,
    intensity: np.ndarray,
    K: IntrinsicsLike,
    width: Optional[int],
    height: Optional[int],
) -> PointSet:
    if xy.shape[0] == 0:
        return PointSet.empty(frame, width, height)
    order = np.lexsort((xy[:, 0], xy[:, 1], -intensity))
    xy = xy[order]
    intensity = intensity[order]
    return PointSet(
        frame=frame,
        points=xy,
        intensities=intensity,
        rays=backproject_many(xy, K),
        width=width,
        height=height,
    )


def extract_points(
    filtered: np.ndarray,
    eps1: float,
    K: IntrinsicsLike,
    frame: int = 0,
    mode: str = "centroids",
) -> PointSet:
    """
    Discrete points of one filtered image.

    ``centroids``: one intensity-weighted centroid per 8-connected component
    of {filtered >= eps1}. ``pixels``: every above-threshold pixel is a point.
    """
    filtered = np.asarray(filtered, dtype=np.float64)
    height, width = filtered.shape
    mask = filtered >= eps1

    if not mask.any():
        return PointSet.empty(frame, width, height)

    if mode == "pixels":
        rows, cols = np.nonzero(mask)
        xy = np.column_stack([cols, rows]).astype(np.float64)
        return _sorted_points(frame, xy, filtered[rows, cols], K, width, height)

    if mode != "centroids":
        raise ValueError(f"unknown point mode '{mode}'")

    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    idx = np.arange(1, n + 1)
    # centre_of_mass returns (row, col)
    com = np.array(ndimage.center_of_mass(filtered, labels, idx), dtype=np.float64).reshape(-1, 2)
    intensity = np.asarray(ndimage.sum(filtered, labels, idx), dtype=np.float64).reshape(-1)
    xy = com[:, ::-1].copy()
    return _sorted_points(frame, xy, intensity, K, width, height)


def extract_point_sets(
    images: Sequence[EventImage],
    eps1: float,
    K: IntrinsicsLike,
    mode: str = "centroids",
) -> List[PointSet]:
    return [extract_points(mean_filter(img), eps1, K, frame=img.index, mode=mode) for img in images]


def to_pgm_bytes(image: EventImage) -> bytes:
    """8-bit binary PGM with counts clamped to 255"""
    pixels = np.minimum(image.counts, 255).astype(np.uint8)
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + pixels.tobytes()
