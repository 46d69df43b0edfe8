"""
Event Simulator
===============

Synthetic event-camera recordings of a star field under constant-rate
rotation, with exact ground-truth attitudes.

Event sources at every substep:
1. Stars: Poisson with rate rate_ref * 10^(-0.4 (mag - mag_ref)) * min(speed / speed_ref, 1),
   placed along the substep's image-plane trail plus Gaussian jitter; the
   leading half of the trail is positive, the trailing half negative
2. Spurious events: Poisson with noise_rate per pixel per second, uniform on the sensor
3. Hot pixels: fixed pixels firing at hot_pixel_rate

Each source of substep k draws from its own stream
``SeedSequence(seed, spawn_key=(source, k))``. Star draws run over the stars
visible in that substep in catalog-row order, so the stream does not depend
on how the recording is split into query blocks, and disjoint time spans
can be simulated independently and merged.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation as _ScipyRotation

from src.core.config import SimulationConfig
from src.models import EventStream, Intrinsics, Rotation, StarCatalog, Trajectory
from src.tools.catalog import cone_query_rows
from src.tools.geometry import boresight, field_of_view_radius, project_many

logger = logging.getLogger(__name__)

STAR_SEED_KEY = 0
SETUP_SEED_KEY = (1,)
NOISE_SEED_KEY = 2
HOT_PIXEL_SEED_KEY = 3

# stars this far outside the sensor (pixels + jitter sigmas) are not drawn
EDGE_MARGIN_PX = 0.5
EDGE_MARGIN_JITTER = 5.0

NO_STARS_WARNING = "no_stars_in_fov"


# ==================== SETUP ====================

def default_intrinsics(config: SimulationConfig) -> Intrinsics:
    return Intrinsics.from_fov(config.width, config.height, config.fov_deg)


def camera_intrinsics(config) -> Intrinsics:
    """
    Intrinsics from the camera section of an EstaConfig.

    ``intrinsics_path`` wins; explicit values override the field-of-view
    defaults of the simulated sensor one by one.
    """
    camera = config.camera
    if camera.intrinsics_path is not None:
        from src.parsers.calibration_parser import IntrinsicsParser

        return IntrinsicsParser().parse(camera.intrinsics_path)
    base = default_intrinsics(config.simulation)
    fx = camera.fx if camera.fx is not None else base.fx
    return Intrinsics(
        fx=fx,
        fy=camera.fy if camera.fy is not None else fx,
        cx=camera.cx if camera.cx is not None else base.cx,
        cy=camera.cy if camera.cy is not None else base.cy,
        skew=camera.skew,
    )


def _setup_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=SETUP_SEED_KEY))


def _substep_rng(seed: int, source: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(source, k)))


def unit_axis(config: SimulationConfig) -> np.ndarray:
    a = np.asarray(config.axis, dtype=np.float64)
    return a / np.linalg.norm(a)


def resolve_initial_attitude(config: SimulationConfig, seed: int) -> Rotation:
    """Configured initial attitude, or one drawn from the setup stream"""
    if config.initial_attitude is not None:
        return Rotation.from_quaternion(config.initial_attitude)
    rng = _setup_rng(seed)
    return Rotation(matrix=_ScipyRotation.random(random_state=rng).as_matrix())


def _hot_pixels(config: SimulationConfig, seed: int) -> np.ndarray:
    rng = _setup_rng(seed)
    rng.random(3)  # initial-attitude draw comes first on this stream
    n_pix = config.width * config.height
    count = min(config.hot_pixel_count, n_pix)
    return np.sort(rng.choice(n_pix, size=count, replace=False)).astype(np.int64)


# ==================== TRAJECTORY ====================

def _rotations_at(times: np.ndarray, axis: np.ndarray, omega: float, R0: np.ndarray) -> np.ndarray:
    rotvecs = np.outer(np.asarray(times, dtype=np.float64) * omega, axis)
    return _ScipyRotation.from_rotvec(rotvecs).as_matrix() @ R0


def make_trajectory(
    config: SimulationConfig,
    times: Sequence[float],
    seed: int = 0,
    initial_attitude: Optional[Rotation] = None,
) -> Trajectory:
    """
    Ground-truth attitudes R*(t) = rot(axis, omega t) R*(0) at ``times``.

    Raises:
        ValueError: a time outside [0, duration]
    """
    times = [float(t) for t in times]
    for t in times:
        if t < 0.0 or t > config.duration_s:
            raise ValueError(f"time {t} outside the recording [0, {config.duration_s}]")
    R0 = initial_attitude or resolve_initial_attitude(config, seed)
    axis = unit_axis(config)
    omega = np.radians(config.angular_speed_dps)
    mats = _rotations_at(np.array(times), axis, omega, R0.matrix) if times else np.zeros((0, 3, 3))
    return Trajectory(
        times=times,
        rotations=[Rotation(matrix=m) for m in mats],
        initial_attitude=R0,
        axis=axis.tolist(),
        angular_speed_dps=config.angular_speed_dps,
    )


def frame_window_bounds(duration_s: float, integration_ms: float) -> List[Tuple[int, int]]:
    """
    Half-open windows [start, end) in microseconds partitioning the recording.

    A trailing partial window is dropped.
    """
    duration_us = int(round(duration_s * 1e6))
    window_us = int(round(integration_ms * 1e3))
    if window_us <= 0:
        raise ValueError("integration time must be positive")
    n = duration_us // window_us
    return [(k * window_us, (k + 1) * window_us) for k in range(n)]


def frame_ground_truth(
    config: SimulationConfig,
    integration_ms: float,
    seed: int = 0,
    initial_attitude: Optional[Rotation] = None,
) -> Dict[int, Rotation]:
    """Ground-truth attitude of every event-image window, taken at the window midpoint"""
    bounds = frame_window_bounds(config.duration_s, integration_ms)
    mids = [0.5 * (a + b) * 1e-6 for a, b in bounds]
    traj = make_trajectory(config, mids, seed=seed, initial_attitude=initial_attitude)
    return {k: R for k, R in enumerate(traj.rotations)}


# ==================== EVENTS ====================

def _star_events(
    rng: np.random.Generator,
    config: SimulationConfig,
    p0: np.ndarray,
    p1: np.ndarray,
    base_rate: np.ndarray,
    start_us: int,
    span_us: int,
):
    dt = span_us * 1e-6
    step = p1 - p0
    speed = np.linalg.norm(step, axis=1) / dt
    rate = base_rate * np.minimum(speed / config.speed_ref_px_s, 1.0)
    counts = rng.poisson(rate * dt)
    total = int(counts.sum())
    if total == 0:
        return None
    idx = np.repeat(np.arange(len(counts)), counts)
    u = rng.random(total)
    jitter = rng.normal(0.0, 1.0, size=(total, 2)) * config.jitter_px
    pos = p0[idx] + step[idx] * u[:, None] + jitter
    t = start_us + np.floor(u * span_us).astype(np.int64)
    pol = (u >= 0.5).astype(np.int8)
    return t, np.rint(pos[:, 0]).astype(np.int64), np.rint(pos[:, 1]).astype(np.int64), pol


def _noise_events(rng: np.random.Generator, config: SimulationConfig, start_us: int, span_us: int):
    dt = span_us * 1e-6
    n = int(rng.poisson(config.noise_rate * config.width * config.height * dt))
    if n == 0:
        return None
    x = rng.integers(0, config.width, size=n)
    y = rng.integers(0, config.height, size=n)
    t = start_us + rng.integers(0, span_us, size=n)
    pol = rng.integers(0, 2, size=n).astype(np.int8)
    return t.astype(np.int64), x.astype(np.int64), y.astype(np.int64), pol


def _hot_events(
    rng: np.random.Generator,
    config: SimulationConfig,
    hot: np.ndarray,
    start_us: int,
    span_us: int,
):
    if hot.size == 0:
        return None
    dt = span_us * 1e-6
    counts = rng.poisson(config.hot_pixel_rate * dt, size=hot.size)
    total = int(counts.sum())
    if total == 0:
        return None
    pix = np.repeat(hot, counts)
    t = start_us + rng.integers(0, span_us, size=total)
    pol = rng.integers(0, 2, size=total).astype(np.int8)
    return t.astype(np.int64), pix % config.width, pix // config.width, pol


def simulate_events(
    catalog: StarCatalog,
    config: SimulationConfig,
    seed: int = 0,
    intrinsics: Optional[Intrinsics] = None,
    frame_integration_ms: Optional[float] = None,
) -> Tuple[EventStream, Trajectory]:
    """
    Simulate the event stream of a rotating star field.

    Args:
        catalog: inertial star catalog (may be empty)
        config: simulation section of the configuration
        seed: master seed; identical seed and config give identical streams
        intrinsics: camera intrinsics (defaults from the field of view)
        frame_integration_ms: when given, the returned trajectory is sampled at
            the event-image window midpoints; otherwise once per second

    Returns:
        (event stream sorted by time, ground-truth trajectory)
    """
    K = intrinsics or default_intrinsics(config)
    R0 = resolve_initial_attitude(config, seed)
    axis = unit_axis(config)
    omega = np.radians(config.angular_speed_dps)
    hot = _hot_pixels(config, seed)

    duration_us = int(round(config.duration_s * 1e6))
    sub_us = max(1, int(round(config.substep_ms * 1e3)))
    n_sub = -(-duration_us // sub_us)
    per_block = max(1, int(round(config.block_s * 1e6 / sub_us)))
    fov_radius_deg = np.degrees(field_of_view_radius(K, config.width, config.height))
    sweep_deg = config.angular_speed_dps * per_block * sub_us * 1e-6
    query_radius = min(90.0, fov_radius_deg + 0.5 * sweep_deg + 1.0)

    logger.info(
        f"🌌 Simulating {config.duration_s:g} s at {config.angular_speed_dps:g} deg/s "
        f"({n_sub} substeps, {len(catalog)} catalog stars, seed {seed})"
    )

    chunks: List[Tuple[np.ndarray, ...]] = []
    source_counts = {"star": 0, "noise": 0, "hot_pixel": 0}
    star_seen = False

    for block_start in range(0, n_sub, per_block):
        block_end = min(n_sub, block_start + per_block)
        edges_us = np.minimum(np.arange(block_start, block_end + 1) * sub_us, duration_us)
        R_edges = _rotations_at(edges_us * 1e-6, axis, omega, R0.matrix)

        rows = np.zeros(0, dtype=np.int64)
        if len(catalog):
            mid = R_edges[len(R_edges) // 2]
            rows = np.sort(cone_query_rows(catalog, boresight(mid), query_radius, config.mag_limit))

        if rows.size:
            dirs = catalog.directions[rows]
            base_rate = config.rate_ref * 10.0 ** (-0.4 * (catalog.magnitudes[rows] - config.mag_ref))
            pix = np.empty((len(R_edges), rows.size, 2))
            front = np.empty((len(R_edges), rows.size), dtype=bool)
            for e, R in enumerate(R_edges):
                pix[e], front[e] = project_many(K, R, dirs)
            with np.errstate(invalid="ignore"):
                inside = (
                    front & (pix[..., 0] > -0.5) & (pix[..., 0] < config.width - 0.5)
                    & (pix[..., 1] > -0.5) & (pix[..., 1] < config.height - 0.5)
                )
                m = EDGE_MARGIN_PX + EDGE_MARGIN_JITTER * config.jitter_px
                near = (
                    front & (pix[..., 0] > -m) & (pix[..., 0] < config.width - 1 + m)
                    & (pix[..., 1] > -m) & (pix[..., 1] < config.height - 1 + m)
                )
            star_seen = star_seen or bool(inside.any())

        for k in range(block_start, block_end):
            start_us = int(edges_us[k - block_start])
            span_us = int(edges_us[k - block_start + 1]) - start_us
            if span_us <= 0:
                continue

            parts = []
            if rows.size:
                e = k - block_start
                sel = np.flatnonzero(front[e] & front[e + 1] & (near[e] | near[e + 1]))
                if sel.size:
                    parts.append((
                        "star",
                        _star_events(
                            _substep_rng(seed, STAR_SEED_KEY, k), config,
                            pix[e, sel], pix[e + 1, sel], base_rate[sel], start_us, span_us,
                        ),
                    ))
            if config.noise_rate > 0.0:
                rng = _substep_rng(seed, NOISE_SEED_KEY, k)
                parts.append(("noise", _noise_events(rng, config, start_us, span_us)))
            if hot.size:
                rng = _substep_rng(seed, HOT_PIXEL_SEED_KEY, k)
                parts.append(("hot_pixel", _hot_events(rng, config, hot, start_us, span_us)))

            for source, part in parts:
                if part is None:
                    continue
                t, x, y, p = part
                keep = (x >= 0) & (x < config.width) & (y >= 0) & (y < config.height)
                if not keep.any():
                    continue
                source_counts[source] += int(keep.sum())
                chunks.append((t[keep], x[keep], y[keep], p[keep]))

    if chunks:
        t = np.concatenate([c[0] for c in chunks])
        x = np.concatenate([c[1] for c in chunks])
        y = np.concatenate([c[2] for c in chunks])
        p = np.concatenate([c[3] for c in chunks])
        order = np.argsort(t, kind="stable")
        t, x, y, p = t[order], x[order], y[order], p[order]
    else:
        t = x = y = p = np.zeros(0, dtype=np.int64)

    warnings: List[str] = []
    if not star_seen:
        warnings.append(NO_STARS_WARNING)
        logger.warning("⚠️  No catalog star entered the field of view during the recording")

    q0 = R0.as_quaternion()
    metadata = {
        "seed": seed,
        "n_events": int(len(t)),
        "source_counts": source_counts,
        "warnings": warnings,
        "initial_attitude": [float(v) for v in q0],
        "axis": axis.tolist(),
        "angular_speed_dps": config.angular_speed_dps,
        "intrinsics": K.model_dump(),
        "hot_pixels": [[int(h % config.width), int(h // config.width)] for h in hot],
    }
    stream = EventStream(width=config.width, height=config.height, t=t, x=x, y=y, p=p, metadata=metadata)

    if frame_integration_ms is not None:
        bounds = frame_window_bounds(config.duration_s, frame_integration_ms)
        times = [0.5 * (a + b) * 1e-6 for a, b in bounds]
    else:
        times = list(np.arange(0.0, config.duration_s + 1e-9, 1.0))
    trajectory = make_trajectory(config, times, seed=seed, initial_attitude=R0)

    logger.info(
        f"✅ {len(t)} events (stars {source_counts['star']}, noise {source_counts['noise']}, "
        f"hot pixels {source_counts['hot_pixel']})"
    )
    return stream, trajectory
