"""
Identification Acceptance Rules
===============================

Decide whether a verified star-identification hypothesis is trustworthy.

A hypothesis built from 3 image points predicts the remaining catalog
stars. Matches beyond the 3 seed points are "extras"; the chance that a
wrong attitude produces that many extras is modelled as a binomial tail:
each of the remaining points lands within the verification radius of one
of the N projected stars with probability p = N * pi * r^2 / (W * H).
"""

import math
from typing import Optional

from scipy.stats import binom

SEED_MATCHES = 3


# ==================== CHANCE MATCHES ====================

def chance_match_probability(n_projected: int, radius_px: float, width: int, height: int) -> float:
    """Probability that one random point falls within radius of a projected star"""
    area = float(width * height)
    if area <= 0:
        return 1.0
    return min(1.0, n_projected * math.pi * radius_px ** 2 / area)


def false_match_probability(
    n_matched: int,
    n_points: int,
    n_projected: int,
    radius_px: float,
    width: int,
    height: int,
) -> float:
    """
    P(at least n_matched - 3 chance matches among n_points - 3 trials).

    Returns 1.0 when there are no extra matches to speak for the hypothesis.
    """
    extras = n_matched - SEED_MATCHES
    trials = n_points - SEED_MATCHES
    if extras <= 0 or trials <= 0:
        return 1.0
    p = chance_match_probability(n_projected, radius_px, width, height)
    return float(binom.sf(extras - 1, trials, p))


# ==================== DECISIONS ====================

def accept_identification(
    n_matched: int,
    probability: float,
    min_matches: int,
    max_probability: float,
) -> bool:
    return n_matched >= min_matches and probability <= max_probability


def rejection_reason(
    n_matched: int,
    probability: Optional[float],
    min_matches: int,
    max_probability: float,
) -> str:
    if n_matched < min_matches:
        return f"best hypothesis matched {n_matched} stars (< {min_matches})"
    if probability is not None and probability > max_probability:
        return f"false-match probability {probability:.3g} exceeds {max_probability:.3g}"
    return ""


def is_decisive(probability: float, early_exit_probability: float) -> bool:
    """A hypothesis this unlikely to be chance ends the search early"""
    return probability <= early_exit_probability
