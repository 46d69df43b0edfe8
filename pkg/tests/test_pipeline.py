"""
Pipeline Tests
==============

Graph wiring, stage failure routing, individual nodes on synthetic state
and end-to-end runs on simulated recordings.
"""

import importlib

import numpy as np
import pytest
from langgraph.graph import END

from src.core.config import build_config
from src.core.constants import NODE_NAMES
from src.core.state import create_initial_state
from src.esta_app import create_esta_graph, route_after, run_tracking
from src.models import EventStream, Intrinsics, PointSet, RelativeRotation, Rotation, StarCatalog, StarTrack
from src.nodes.averaging_node import averaging_node
from src.nodes.bundle_node import bundle_node
from src.nodes.star_id_node import star_id_node
from src.tools.catalog import catalog_from_config
from src.tools.evaluation import aligned_errors, error_stats, per_frame_errors, relative_errors
from src.tools.geometry import backproject_many
from src.tools.simulator import camera_intrinsics, frame_ground_truth, simulate_events

AXIS = [0.2, 1.0, 0.1]


def empty_stream(config) -> EventStream:
    sim = config.simulation
    return EventStream(width=sim.width, height=sim.height, t=[], x=[], y=[], p=[])


def empty_catalog() -> StarCatalog:
    return StarCatalog(stars=[])


def synthetic_state(config, intrinsics, n_frames=12, anchors=(0,), window=3):
    """State as registration and star identification would leave it, noise-free"""
    truth = {k: Rotation.from_axis_angle(AXIS, np.radians(0.16 * k)) for k in range(n_frames)}
    state = create_initial_state(empty_stream(config), empty_catalog(), intrinsics, config)
    state["point_sets"] = [PointSet.empty(k) for k in range(n_frames)]
    state["relative_rotations"] = [
        RelativeRotation(j=j, i=i, rotation=truth[j] @ truth[i].inverse(), residual=0.0)
        for i in range(n_frames)
        for j in range(max(0, i - window), i)
    ]
    state["absolute_rotations"] = {k: truth[k] for k in anchors}
    return state, truth


def simulated_run(config):
    catalog = catalog_from_config(config.catalog, config.seed)
    K = camera_intrinsics(config)
    stream, _ = simulate_events(catalog, config.simulation, seed=config.seed, intrinsics=K)
    truth = frame_ground_truth(config.simulation, config.frames.integration_ms, seed=config.seed)
    return run_tracking(stream, catalog, K, config), truth


# ==================== GRAPH ====================

def test_graph_has_every_stage():
    graph = create_esta_graph()
    nodes = set(graph.get_graph().nodes)
    assert set(NODE_NAMES) <= nodes


def test_route_after_follows_stage_order():
    for stage, following in zip(NODE_NAMES, NODE_NAMES[1:]):
        assert route_after(stage)({"error": None}) == following
    assert route_after(NODE_NAMES[-1])({"error": None}) == END


def test_route_after_ends_on_error():
    assert route_after("frames")({"error": "[frames] boom"}) == END
    assert route_after("registration").__name__ == "route_after_registration"


# ==================== FAILURE ROUTING ====================

def test_zero_event_run_stops_at_star_identification(short_config, intrinsics):
    """Test an empty recording: frames succeeds, star identification has nothing to anchor"""
    state = run_tracking(empty_stream(short_config), empty_catalog(), intrinsics, short_config)

    assert state["failed_stage"] == "star_id"
    assert state["error"].startswith("[star_id]")
    assert state["error"].count("[star_id]") == 1
    assert "event stream is empty" in state["warnings"]
    assert state["attitudes_averaged"] == {}
    assert state["attitudes_bundle"] == {}
    assert set(state["stage_runtimes"]) == {"frames", "star_id"}
    assert state["decision_log"][-1]["decision_type"] == "star_id_failure"


def test_node_exception_is_recorded_and_ends_graph(short_config, intrinsics, mocker):
    frames_module = importlib.import_module("src.nodes.frames_node")
    mocker.patch.object(frames_module, "build_event_images", side_effect=RuntimeError("boom"))

    state = run_tracking(empty_stream(short_config), empty_catalog(), intrinsics, short_config)

    assert state["failed_stage"] == "frames"
    assert state["error"] == "[frames] boom"
    assert set(state["stage_runtimes"]) == {"frames"}
    entry = state["decision_log"][-1]
    assert entry["data"]["exception_type"] == "RuntimeError"


# ==================== STAR ID NODE ====================

def test_star_id_index_uses_the_recorded_sensor_size(mocker):
    config = build_config({})
    K = Intrinsics.from_fov(320, 240, 20.0)
    state = create_initial_state(EventStream.empty(320, 240), empty_catalog(), K, config)
    state["selected_frames"] = [0]
    state["point_sets"] = [PointSet.empty(0, 320, 240)]
    spy = mocker.spy(importlib.import_module("src.nodes.star_id_node"), "build_index_for_camera")

    update = star_id_node(state)

    assert spy.call_args.args[2:4] == (320, 240)
    assert update["failed_stage"] == "star_id"
    assert update["identification"][0].status == "skipped"


# ==================== AVERAGING NODE ====================

def test_averaging_node_recovers_noise_free_trajectory(intrinsics):
    config = build_config({})
    state, truth = synthetic_state(config, intrinsics, anchors=(0, 6))

    update = averaging_node(state)

    assert "error" not in update
    assert update["gauge_free"] is False
    assert sorted(update["attitudes_averaged"]) == list(range(12))
    assert sorted(update["attitudes_chained"]) == list(range(12))
    errors = per_frame_errors(update["attitudes_averaged"], truth)
    assert max(errors.values()) < 1e-4
    assert update["decision_log"][0]["data"]["n_absolute"] == 2
    assert "averaging" in update["stage_runtimes"]


def test_averaging_node_without_absolute_rotations_is_gauge_free(intrinsics):
    config = build_config({})
    state, truth = synthetic_state(config, intrinsics, anchors=())

    update = averaging_node(state)

    assert update["gauge_free"] is True
    assert np.allclose(update["attitudes_averaged"][0].matrix, np.eye(3))
    assert any("gauge-free" in w for w in update["warnings"])
    # correct up to one global rotation
    errors = aligned_errors(update["attitudes_averaged"], truth)
    assert max(errors.values()) < 1e-4


def test_averaging_node_reports_unanchored_segment(intrinsics):
    config = build_config({})
    state, _ = synthetic_state(config, intrinsics, anchors=(0,), window=1)
    state["relative_rotations"] = [r for r in state["relative_rotations"] if r.pair != (5, 6)]

    update = averaging_node(state)

    assert "error" not in update
    assert sorted(update["attitudes_averaged"]) == list(range(6))
    assert any("unanchored" in w for w in update["warnings"])


# ==================== BUNDLE NODE ====================

def test_bundle_node_disabled_produces_no_attitudes(intrinsics):
    config = build_config({"bundle": {"enabled": False}})
    state, truth = synthetic_state(config, intrinsics)
    state["attitudes_averaged"] = truth

    update = bundle_node(state)

    assert "attitudes_bundle" not in update
    assert update["decision_log"][0]["reasoning"] == "disabled by configuration"
    assert "bundle" in update["stage_runtimes"]


def test_bundle_node_refines_perturbed_attitudes(intrinsics):
    config = build_config({})
    state, truth = synthetic_state(config, intrinsics, n_frames=6)
    rng = np.random.default_rng(7)
    n_stars = 25
    stars = backproject_many(rng.uniform([10, 10], [230, 170], size=(n_stars, 2)), intrinsics)
    state["point_sets"] = [
        PointSet(frame=k, points=np.zeros((n_stars, 2)), intensities=np.ones(n_stars), rays=stars @ R.matrix.T)
        for k, R in truth.items()
    ]
    state["tracks"] = [
        StarTrack(track_id=s, observations={k: s for k in truth}) for s in range(n_stars)
    ]
    state["attitudes_averaged"] = {
        k: R if k == 0 else Rotation.from_rotvec(rng.normal(scale=np.radians(0.1), size=3)) @ R
        for k, R in truth.items()
    }

    update = bundle_node(state)

    assert "error" not in update
    assert set(update["attitudes_bundle"]) == set(truth)
    assert len(update["star_directions"]) == n_stars
    before = per_frame_errors(state["attitudes_averaged"], truth)
    after = per_frame_errors(update["attitudes_bundle"], truth)
    assert max(after.values()) < max(before.values())
    data = update["decision_log"][0]["data"]
    assert data["final_cost"] < data["initial_cost"]
    assert data["priors"] == 1


# ==================== END TO END ====================

def test_short_simulated_recording_is_tracked():
    """Test a two-second recording through every stage"""
    config = build_config({"simulation": {"duration_s": 2.0}, "catalog": {"n_stars": 15000}})
    state, truth = simulated_run(config)

    assert state["error"] is None
    assert set(state["stage_runtimes"]) == set(NODE_NAMES)
    assert len(state["images"]) == len(truth)
    assert state["absolute_rotations"]

    averaged = state["attitudes_averaged"]
    assert len(averaged) >= 0.9 * len(truth)
    assert error_stats(per_frame_errors(averaged, truth, frames=sorted(averaged)).values()).rmse < 1.0

    bundle = state["attitudes_bundle"]
    assert set(bundle) == set(averaged)
    assert error_stats(per_frame_errors(bundle, truth, frames=sorted(bundle)).values()).rmse < 1.0


@pytest.mark.slow
def test_full_length_recording_meets_accuracy_targets():
    """Test the default 45 s recording: bundle <= averaged < chained"""
    config = build_config({})
    state, truth = simulated_run(config)
    assert state["error"] is None

    def rmse(attitudes):
        return error_stats(per_frame_errors(attitudes, truth).values()).rmse

    chained = rmse(state["attitudes_chained"])
    averaged = rmse(state["attitudes_averaged"])
    bundle = rmse(state["attitudes_bundle"])
    assert bundle <= 1.0
    assert bundle <= averaged < chained

    relative = {r.pair: r.rotation for r in state["relative_rotations"]}
    assert error_stats(relative_errors(relative, truth).values()).rmse <= 0.35
