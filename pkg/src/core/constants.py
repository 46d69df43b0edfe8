"""
ESTA Constants
==============

System-wide constants: file headers, stage names, controlled vocabularies.

Numerical defaults that a user may tune live in ``config.py``; the values
here are fixed conventions shared by writers, parsers and nodes.
"""

# ==================== FILE HEADERS ====================

CATALOG_HEADER = ["id", "ra_deg", "dec_deg", "mag"]
EVENTS_HEADER = ["t_us", "x", "y", "p"]
ATTITUDE_HEADER = ["frame_index", "qw", "qx", "qy", "qz"]
RELATIVE_HEADER = ["j", "i", "qw", "qx", "qy", "qz", "residual", "n_inliers"]
TRACKS_HEADER = ["track_id", "frame", "x", "y"]
STAR_DIRECTIONS_HEADER = ["track_id", "x", "y", "z"]
IDENTIFICATION_HEADER = ["frame", "n_points", "n_matched", "qw", "qx", "qy", "qz", "status"]
POINTS_HEADER = ["frame", "x", "y"]
HOMOGRAPHY_PAIRS_HEADER = ["u", "v", "u2", "v2"]
PROJECTION_PAIRS_HEADER = ["u", "v", "X", "Y", "Z"]
INTRINSICS_HEADER = ["fx", "fy", "cx", "cy", "skew"]
AVERAGING_LOG_HEADER = ["iter", "objective", "max_update"]
BUNDLE_LOG_HEADER = ["iter", "cost", "lambda", "accepted"]
EULER_HEADER = ["frame_index", "yaw_deg", "pitch_deg", "roll_deg"]

FLOAT_FORMAT = "%.17g"
"""Round-trip exact float formatting for every text output"""

# ==================== OUTPUT FILE NAMES ====================

EVENTS_FILE = "events.csv"
GROUND_TRUTH_FILE = "ground_truth.csv"
CATALOG_FILE = "catalog.csv"
METADATA_FILE = "metadata.json"

ATTITUDE_FILES = {
    "chained": "attitudes_chained.csv",
    "averaged": "attitudes_averaged.csv",
    "bundle": "attitudes_bundle.csv",
}
IDENTIFICATION_FILE = "identification_report.csv"
RELATIVE_FILE = "relative_rotations.csv"
TRACKS_FILE = "tracks.csv"
STAR_DIRECTIONS_FILE = "star_directions.csv"
AVERAGING_LOG_FILE = "averaging_log.csv"
BUNDLE_LOG_FILE = "bundle_log.csv"
RUNTIMES_FILE = "runtimes.json"
DECISION_LOG_FILE = "decision_log.json"
POINTS_FILE = "points.csv"
REPORT_FILE = "report.json"
PER_FRAME_ERRORS_FILE = "per_frame_errors.csv"
EULER_FILES = {
    "chained": "euler_chained.csv",
    "averaged": "euler_averaged.csv",
    "bundle": "euler_bundle.csv",
    "ground_truth": "euler_ground_truth.csv",
}
INTRINSICS_FILE = "intrinsics.csv"
PGM_DIR = "frames"
CALIBRATION_FILE = "calibration.txt"

# ==================== PIPELINE ====================

NODE_NAMES = ["frames", "star_id", "registration", "averaging", "bundle"]
"""Pipeline stages in execution order"""

STAGE_GROUPS = {
    "frames": "image_generation",
    "star_id": "measurement_extraction",
    "registration": "measurement_extraction",
    "averaging": "optimisation",
    "bundle": "optimisation",
}
"""Runtime grouping used by the runtime report"""

ESTIMATE_METHODS = ["chained", "averaged", "bundle"]

POINT_MODES = ["centroids", "pixels"]

BUNDLE_ANCHORS = ["first", "priors", "none"]

IDENTIFICATION_STATUSES = ["identified", "failed", "skipped"]

ERROR_BUCKETS = ["below_1deg", "below_10deg", "above_10deg"]
"""Absolute-rotation error histogram: [0, 1), [1, 10), [10, 180]"""

ERROR_BUCKET_EDGES_DEG = (1.0, 10.0)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

# ==================== CLI EXIT CODES ====================

EXIT_OK = 0
EXIT_ESTA_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3
