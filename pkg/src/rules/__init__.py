"""
ESTA Rules
==========

Deterministic acceptance rules of the tracking pipeline.
"""

from src.rules.frame_rules import (
    apc_range,
    is_frame_selected,
    select_by_apc,
    selection_summary,
)
from src.rules.identification_rules import (
    accept_identification,
    chance_match_probability,
    false_match_probability,
    is_decisive,
    rejection_reason,
)
from src.rules.registration_rules import (
    accept_relative_rotation,
    pair_in_window,
    rms_residual_px,
)

__all__ = [
    # Frame selection
    "apc_range",
    "is_frame_selected",
    "select_by_apc",
    "selection_summary",
    # Identification
    "accept_identification",
    "chance_match_probability",
    "false_match_probability",
    "is_decisive",
    "rejection_reason",
    # Registration
    "accept_relative_rotation",
    "pair_in_window",
    "rms_residual_px",
]
