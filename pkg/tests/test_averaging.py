"""
Rotation Averaging Tests
========================

Augmented averaging with a dummy inertial node, graph connectivity checks
and the relative-rotation chaining baseline.
"""

import numpy as np
import pytest

from src.core.config import AveragingConfig
from src.core.exceptions import AnchorFreeError, UnanchoredSegmentError, UnchainedSegmentError
from src.models import MeasurementSet, Rotation
from src.tools.averaging import (
    anchored_frames,
    augmented_rotation_averaging,
    averaging_objective,
    chain_rotations,
    solve_augmented_averaging,
    unanchored_segments,
)
from src.tools.geometry import angular_error
from tests.conftest import random_rotation

AXIS = [0.2, 1.0, 0.1]


def trajectory(rng, n_frames, step_deg=0.16):
    R0 = random_rotation(rng, max_angle=1.0)
    return [Rotation.from_axis_angle(AXIS, np.radians(k * step_deg)) @ R0 for k in range(n_frames)]


def perturb(rng, R: Rotation, sigma_deg: float) -> Rotation:
    if sigma_deg == 0.0:
        return R
    return Rotation.from_rotvec(rng.normal(scale=np.radians(sigma_deg), size=3)) @ R


def measurements(rng, truth, window=3, anchors=(0,), rel_noise=0.0, abs_noise=0.0, skip=()):
    relative = {}
    for i in range(len(truth)):
        for j in range(max(0, i - window), i):
            if (j, i) in skip:
                continue
            relative[(j, i)] = perturb(rng, truth[j] @ truth[i].inverse(), rel_noise)
    absolute = {k: perturb(rng, truth[k], abs_noise) for k in anchors}
    return MeasurementSet(n_frames=len(truth), relative=relative, absolute=absolute)


# ==================== AUGMENTED AVERAGING ====================

def test_noise_free_measurements_are_recovered(rng):
    truth = trajectory(rng, 20)
    ms = measurements(rng, truth, anchors=(0, 10))
    attitudes = augmented_rotation_averaging(ms)
    assert sorted(attitudes) == list(range(20))
    for k, R in attitudes.items():
        assert angular_error(R, truth[k]) < 1e-5


def test_objective_is_zero_at_ground_truth(rng):
    truth = trajectory(rng, 8)
    ms = measurements(rng, truth, anchors=(3,))
    assert averaging_objective(ms, dict(enumerate(truth))) == pytest.approx(0.0, abs=1e-20)
    assert averaging_objective(ms, dict(enumerate(truth)), huber_delta=0.1) == pytest.approx(0.0, abs=1e-20)


def test_convergence_log_is_monotone(rng):
    truth = trajectory(rng, 15)
    ms = measurements(rng, truth, anchors=(0, 7, 14), rel_noise=0.05, abs_noise=0.02)
    _, log = solve_augmented_averaging(ms)
    objectives = [entry["objective"] for entry in log]
    assert log[0]["iter"] == 0
    assert all(b <= a for a, b in zip(objectives, objectives[1:]))


def test_absolute_rotations_bound_the_drift(rng):
    truth = trajectory(rng, 40)
    ms = measurements(rng, truth, window=2, anchors=(0, 10, 20, 30, 39), rel_noise=0.05, abs_noise=0.02)
    averaged = augmented_rotation_averaging(ms, AveragingConfig())
    chained = chain_rotations(ms)
    err_avg = np.mean([angular_error(averaged[k], truth[k]) for k in range(40)])
    err_chain = np.mean([angular_error(chained[k], truth[k]) for k in range(40)])
    assert err_avg < err_chain
    assert err_avg < 0.3


def test_result_is_proper_rotation(rng):
    truth = trajectory(rng, 10)
    ms = measurements(rng, truth, anchors=(0, 9), rel_noise=0.1, abs_noise=0.1)
    for R in augmented_rotation_averaging(ms).values():
        assert np.allclose(R.matrix @ R.matrix.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(R.matrix) == pytest.approx(1.0)


def test_averaging_needs_an_absolute_rotation(rng):
    truth = trajectory(rng, 5)
    ms = measurements(rng, truth, anchors=())
    with pytest.raises(AnchorFreeError):
        solve_augmented_averaging(ms)


def test_large_alpha_pins_anchored_frames(rng):
    truth = trajectory(rng, 30)
    ms = measurements(rng, truth, anchors=(0, 15, 29), rel_noise=0.05, abs_noise=0.2)
    pinned = augmented_rotation_averaging(ms.model_copy(update={"alpha": 1e6}))
    for k, R in ms.absolute.items():
        assert angular_error(pinned[k], R) < 1e-3


def test_edge_order_does_not_change_the_result(rng):
    truth = trajectory(rng, 12)
    ms = measurements(rng, truth, anchors=(0, 11), rel_noise=0.05, abs_noise=0.02)
    keys = list(ms.relative)
    relative = {keys[k]: ms.relative[keys[k]] for k in rng.permutation(len(keys))}
    shuffled = ms.model_copy(update={"relative": relative})
    a = augmented_rotation_averaging(ms)
    b = augmented_rotation_averaging(shuffled)
    for k in a:
        assert np.array_equal(a[k].matrix, b[k].matrix)


# ==================== CONNECTIVITY ====================

def _split_graph(rng):
    """Frames 0..4 anchored at 0; frame 5 isolated; 6..9 connected only among themselves"""
    truth = trajectory(rng, 10)
    relative = {
        (j, i): truth[j] @ truth[i].inverse()
        for i in range(10) for j in range(max(0, i - 2), i)
        if (i <= 4) or (j >= 6)
    }
    return truth, MeasurementSet(n_frames=10, relative=relative, absolute={0: truth[0]})


def test_unanchored_segments_are_reported(rng):
    _, ms = _split_graph(rng)
    assert anchored_frames(ms) == [0, 1, 2, 3, 4]
    assert unanchored_segments(ms) == [(5, 9)]
    with pytest.raises(UnanchoredSegmentError) as exc:
        solve_augmented_averaging(ms)
    assert exc.value.segments == [(5, 9)]


def test_partial_averaging_solves_anchored_frames(rng):
    truth, ms = _split_graph(rng)
    attitudes, _ = solve_augmented_averaging(ms, allow_partial=True)
    assert sorted(attitudes) == [0, 1, 2, 3, 4]
    for k, R in attitudes.items():
        assert angular_error(R, truth[k]) < 1e-5


# ==================== CHAINING ====================

def test_chaining_is_exact_without_noise(rng):
    truth = trajectory(rng, 12)
    ms = measurements(rng, truth, window=1, anchors=(4,))
    chained = chain_rotations(ms)
    assert sorted(chained) == list(range(12))
    for k, R in chained.items():
        assert angular_error(R, truth[k]) < 1e-6


def test_chaining_bridges_a_missing_consecutive_edge(rng):
    truth = trajectory(rng, 6)
    ms = measurements(rng, truth, window=2, skip={(2, 3)})
    chained = chain_rotations(ms)
    assert angular_error(chained[3], truth[3]) < 1e-6


def test_chaining_reaches_frame_through_outgoing_edge(rng):
    # frame 5 has no incoming edge; it is recovered from frame 6 afterwards
    truth = trajectory(rng, 9)
    ms = measurements(rng, truth, window=2, skip={(3, 5), (4, 5)})
    chained = chain_rotations(ms)
    assert sorted(chained) == list(range(9))
    assert angular_error(chained[5], truth[5]) < 1e-6


def test_chaining_prefers_the_shortest_edge(rng):
    truth = trajectory(rng, 5)
    ms = measurements(rng, truth, window=2)
    relative = dict(ms.relative)
    relative[(0, 2)] = Rotation.from_axis_angle([1.0, 0.0, 0.0], 0.3) @ relative[(0, 2)]
    chained = chain_rotations(ms.model_copy(update={"relative": relative}))
    assert angular_error(chained[2], truth[2]) < 1e-6


def test_chaining_reports_unreachable_frame(rng):
    truth = trajectory(rng, 6)
    ms = measurements(rng, truth, window=1, skip={(2, 3)})
    with pytest.raises(UnchainedSegmentError) as exc:
        chain_rotations(ms)
    assert exc.value.frame == 3
    partial = chain_rotations(ms, partial=True)
    assert sorted(partial) == [0, 1, 2]


def test_chaining_from_anchor_frame(rng):
    truth = trajectory(rng, 4)
    ms = measurements(rng, truth, window=1, anchors=())
    with pytest.raises(AnchorFreeError):
        chain_rotations(ms)
    chained = chain_rotations(ms, anchor_frame=1)
    assert np.allclose(chained[1].matrix, np.eye(3))
    gauge = truth[1].inverse()
    for k, R in chained.items():
        assert angular_error(R, truth[k] @ gauge) < 1e-6


# ==================== MEASUREMENT SET ====================

def test_measurement_set_validates_edges():
    with pytest.raises(ValueError):
        MeasurementSet(n_frames=4, relative={(2, 1): Rotation.identity()})
    with pytest.raises(ValueError):
        MeasurementSet(n_frames=4, relative={(1, 4): Rotation.identity()})
    with pytest.raises(ValueError):
        MeasurementSet(n_frames=4, absolute={4: Rotation.identity()})
