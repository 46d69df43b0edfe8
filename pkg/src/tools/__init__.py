"""
ESTA Numerical Tools
====================

Geometry, catalog access, simulation and every estimation stage of the
star tracker. All tools are pure functions over the models in ``src.models``.
"""

# Geometry
from src.tools.geometry import (
    angle_between,
    angular_error,
    angular_errors,
    backproject,
    backproject_many,
    boresight,
    chordal_distance,
    exp_so3,
    field_of_view_diagonal,
    field_of_view_radius,
    in_sensor,
    log_so3,
    project,
    project_many,
    project_to_so3,
    relative_rotation,
    rotation_from_axis_angle,
    rotation_to_euler,
)

# Catalog
from src.tools.catalog import (
    catalog_from_config,
    cone_query,
    cone_query_linear,
    cone_query_rows,
    generate_synthetic_catalog,
    load_catalog,
    radec_to_vector,
    vector_to_radec,
    write_catalog,
)

# Simulator
from src.tools.simulator import (
    camera_intrinsics,
    default_intrinsics,
    frame_ground_truth,
    frame_window_bounds,
    make_trajectory,
    resolve_initial_attitude,
    simulate_events,
)

# Event images
from src.tools.frames import (
    apc,
    apc_values,
    build_event_images,
    extract_point_sets,
    extract_points,
    mean_filter,
    select_frames,
)

# Star identification
from src.tools.star_id import (
    absolute_rotations,
    build_index,
    build_index_for_camera,
    identify,
    identify_frame,
    identified_rotations,
    identify_frames,
    solve_wahba,
    wahba_svd,
)

# Registration
from src.tools.registration import build_tracks, relative_rotations, trimmed_icp

# Averaging
from src.tools.averaging import (
    augmented_rotation_averaging,
    averaging_objective,
    chain_rotations,
    solve_augmented_averaging,
)

# Bundle adjustment
from src.tools.bundle import (
    build_problem,
    bundle_adjust,
    bundle_cost,
    gauge_anchor,
    init_star_directions,
    residual_jacobians,
)

# Calibration
from src.tools.calibration import (
    calibrate,
    estimate_homography,
    factor_projection,
    solve_projection,
)

# Evaluation
from src.tools.evaluation import (
    align_global_rotation,
    error_buckets,
    error_stats,
    evaluate,
    per_frame_errors,
    relative_errors,
)

__all__ = [
    # Geometry
    "angle_between",
    "angular_error",
    "angular_errors",
    "backproject",
    "backproject_many",
    "boresight",
    "chordal_distance",
    "exp_so3",
    "field_of_view_diagonal",
    "field_of_view_radius",
    "in_sensor",
    "log_so3",
    "project",
    "project_many",
    "project_to_so3",
    "relative_rotation",
    "rotation_from_axis_angle",
    "rotation_to_euler",
    # Catalog
    "catalog_from_config",
    "cone_query",
    "cone_query_linear",
    "cone_query_rows",
    "generate_synthetic_catalog",
    "load_catalog",
    "radec_to_vector",
    "vector_to_radec",
    "write_catalog",
    # Simulator
    "camera_intrinsics",
    "default_intrinsics",
    "frame_ground_truth",
    "frame_window_bounds",
    "make_trajectory",
    "resolve_initial_attitude",
    "simulate_events",
    # Event images
    "apc",
    "apc_values",
    "build_event_images",
    "extract_point_sets",
    "extract_points",
    "mean_filter",
    "select_frames",
    # Star identification
    "absolute_rotations",
    "build_index",
    "build_index_for_camera",
    "identify",
    "identify_frame",
    "identified_rotations",
    "identify_frames",
    "solve_wahba",
    "wahba_svd",
    # Registration
    "build_tracks",
    "relative_rotations",
    "trimmed_icp",
    # Averaging
    "augmented_rotation_averaging",
    "averaging_objective",
    "chain_rotations",
    "solve_augmented_averaging",
    # Bundle adjustment
    "build_problem",
    "bundle_adjust",
    "bundle_cost",
    "gauge_anchor",
    "init_star_directions",
    "residual_jacobians",
    # Calibration
    "calibrate",
    "estimate_homography",
    "factor_projection",
    "solve_projection",
    # Evaluation
    "align_global_rotation",
    "error_buckets",
    "error_stats",
    "evaluate",
    "per_frame_errors",
    "relative_errors",
]
