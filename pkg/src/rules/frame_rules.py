"""
Frame Selection Rules
=====================

Deterministic selection of the event images worth running star
identification on: a frame is kept when its active pixel count (APC)
reaches eps2.
"""

from typing import Dict, List, Sequence, Tuple


# ==================== APC SELECTION ====================

def is_frame_selected(apc_value: int, eps2: int) -> bool:
    return apc_value >= eps2


def select_by_apc(apc_values: Sequence[int], eps2: int) -> List[int]:
    """
    Indices of frames with APC >= eps2, ascending.

    Raising eps2 never grows the result.
    """
    return [i for i, v in enumerate(apc_values) if is_frame_selected(v, eps2)]


def selection_summary(apc_values: Sequence[int], selected: Sequence[int]) -> Dict[str, float]:
    """Counts reported in the frames node's decision log"""
    values = list(apc_values)
    return {
        "n_frames": len(values),
        "n_selected": len(selected),
        "apc_min": float(min(values)) if values else 0.0,
        "apc_max": float(max(values)) if values else 0.0,
        "apc_mean": float(sum(values) / len(values)) if values else 0.0,
    }


def apc_range(apc_values: Sequence[int]) -> Tuple[int, int]:
    values = list(apc_values)
    if not values:
        return (0, 0)
    return (min(values), max(values))
