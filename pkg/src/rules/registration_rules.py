"""
Registration Acceptance Rules
=============================

Gate on trimmed-ICP results: a pair enters the relative-rotation graph only
when its trimmed RMS residual, converted to pixels with the focal length,
stays below ``max_rms_residual_px``.
"""

from typing import Tuple

from src.models import RelativeRotation


def rms_residual_px(result: RelativeRotation, focal_px: float) -> float:
    """Trimmed RMS chordal residual (rad, small-angle) expressed in pixels"""
    return float(result.rms_residual) * float(focal_px)


def accept_relative_rotation(
    result: RelativeRotation,
    focal_px: float,
    max_rms_residual_px: float,
) -> Tuple[bool, str]:
    """
    Returns:
        (accepted, reason) where reason explains a rejection
    """
    rms_px = rms_residual_px(result, focal_px)
    if rms_px > max_rms_residual_px:
        return False, f"trimmed RMS {rms_px:.2f} px exceeds {max_rms_residual_px:.2f} px"
    if len(result.inliers) < 3:
        return False, f"only {len(result.inliers)} kept pairs"
    return True, ""


def pair_in_window(j: int, i: int, window: int) -> bool:
    return 0 < i - j <= window
