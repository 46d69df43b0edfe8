"""
Rotation-Only Bundle Adjustment
===============================

Jointly refines frame attitudes R_i and unit star directions X_s by
minimizing sum ||y_is - R_i X_s||^2 over all track observations.

Optional terms:

- absolute-rotation priors w ||R_k - R~_k||_F^2 on catalog-identified frames;
- a Huber loss on the observation residual norms (IRLS weights).

- Attitudes move by left increments R <- exp(phi) R.
- Directions move in a 2-D tangent basis B(X) and are renormalized.
- Levenberg-Marquardt with Marquardt scaling; star blocks are eliminated
  (Schur complement) so each step solves a sparse system over frames only.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from langsmith import traceable
from scipy import sparse
from scipy.sparse.linalg import spsolve

from src.core.config import BundleConfig
from src.core.exceptions import NumericalFailureError
from src.models import BAIteration, BAProblem, BAResult, PointSet, Rotation, StarTrack
from src.tools.geometry import exp_so3, hat_many, project_to_so3

logger = logging.getLogger(__name__)

MAX_LAMBDA = 1e16
LAMBDA_UP = 10.0
LAMBDA_DOWN = 3.0


# ==================== PARAMETERIZATION ====================

def tangent_basis(X) -> np.ndarray:
    """
    Orthonormal (..., 3, 2) basis of the tangent plane at unit X.

    Built from e_x unless X is close to it, then from e_y.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = X.reshape(-1, 3)
    a = np.zeros_like(X)
    use_x = np.abs(X[:, 0]) < 0.9
    a[use_x, 0] = 1.0
    a[~use_x, 1] = 1.0
    b1 = a - np.sum(a * X, axis=1, keepdims=True) * X
    b1 /= np.linalg.norm(b1, axis=1, keepdims=True)
    b2 = np.cross(X, b1)
    B = np.stack([b1, b2], axis=2)
    return B[0] if single else B


def retract_direction(X: np.ndarray, B: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """normalize(X + B xi), vectorized over leading axes"""
    Y = X + np.einsum("...ij,...j->...i", B, xi)
    return Y / np.linalg.norm(Y, axis=-1, keepdims=True)


def residual_jacobians(R, X, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Residual r = y - R X and its Jacobians.

    Returns:
        (r (3,), J_R (3, 3) w.r.t. a left increment of R, J_X (3, 2) w.r.t. the tangent increment of X)
    """
    R = R.matrix if isinstance(R, Rotation) else np.asarray(R, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    RX = R @ X
    r = np.asarray(y, dtype=np.float64) - RX
    J_R = hat_many(RX[None, :])[0]
    J_X = -R @ tangent_basis(X)
    return r, J_R, J_X


# ==================== SETUP ====================

def track_observations(
    tracks: Sequence[StarTrack],
    point_sets: Dict[int, PointSet],
) -> Dict[int, Dict[int, np.ndarray]]:
    """track -> frame -> observed unit ray"""
    return {
        t.track_id: {f: point_sets[f].rays[p] for f, p in t.observations.items()}
        for t in tracks
    }


def init_star_directions(
    attitudes: Dict[int, Rotation],
    observations: Dict[int, Dict[int, np.ndarray]],
) -> Tuple[Dict[int, np.ndarray], List[int]]:
    """
    Mean of the back-rotated observations R_i^T y_is, renormalized.

    Observations in frames without an attitude are ignored. Tracks left with
    fewer than 2 observations or with a zero-norm mean are dropped.

    Returns:
        (track -> unit direction, dropped track ids)
    """
    directions: Dict[int, np.ndarray] = {}
    dropped: List[int] = []
    for s, obs in sorted(observations.items()):
        frames = [f for f in obs if f in attitudes]
        if len(frames) < 2:
            dropped.append(s)
            continue
        back = np.array([attitudes[f].matrix.T @ obs[f] for f in frames])
        mean = back.mean(axis=0)
        n = np.linalg.norm(mean)
        if n < 1e-12:
            logger.warning(f"⚠️  Track {s}: observations cancel out, dropped")
            dropped.append(s)
            continue
        directions[s] = mean / n
    return directions, dropped


def gauge_anchor(problem: BAProblem, anchor_frame: int, R_fix: Optional[Rotation] = None) -> BAProblem:
    """Copy of ``problem`` with ``anchor_frame`` held at ``R_fix`` (default: its current value)"""
    if anchor_frame not in problem.attitudes:
        raise ValueError(f"anchor frame {anchor_frame} has no attitude")
    attitudes = dict(problem.attitudes)
    if R_fix is not None:
        attitudes[anchor_frame] = R_fix
    return problem.model_copy(update={"attitudes": attitudes, "anchor_frame": anchor_frame})


def build_problem(
    attitudes: Dict[int, Rotation],
    tracks: Sequence[StarTrack],
    point_sets: Dict[int, PointSet],
    anchor: str = "first",
    min_track_length: int = 2,
    priors: Optional[Dict[int, Rotation]] = None,
    prior_weight: float = 0.0,
) -> Tuple[BAProblem, List[int]]:
    """
    Bundle-adjustment problem over the tracks observed in frames with attitudes.

    Args:
        anchor: "first" holds the first observed frame, "priors" leaves the
            gauge to the priors (first frame when there are none), "none" is free
        priors: absolute rotations (catalog identifications) pulling their
            frames with weight ``prior_weight``; frames outside the problem are ignored

    Returns:
        (problem, dropped track ids)
    """
    raw = track_observations([t for t in tracks if len(t) >= min_track_length], point_sets)
    observations = {
        s: {f: y for f, y in obs.items() if f in attitudes} for s, obs in raw.items()
    }
    directions, dropped = init_star_directions(attitudes, observations)
    dropped += [t.track_id for t in tracks if len(t) < min_track_length]
    observations = {s: observations[s] for s in directions}
    used = sorted({f for obs in observations.values() for f in obs})
    kept_priors = {}
    if prior_weight > 0:
        kept_priors = {f: R for f, R in (priors or {}).items() if f in set(used)}
    problem = BAProblem(
        attitudes={f: attitudes[f] for f in used},
        directions=directions,
        observations=observations,
        priors=kept_priors,
        prior_weight=prior_weight,
    )
    if used and (anchor == "first" or (anchor == "priors" and not problem.priors)):
        problem = gauge_anchor(problem, used[0])
    return problem, sorted(dropped)


# ==================== COST ====================

class _Layout:
    """Flattened observation and prior arrays of a problem"""

    def __init__(self, problem: BAProblem):
        self.frames = problem.frames
        self.tracks = [s for s in problem.track_ids if s in problem.directions]
        frame_pos = {f: k for k, f in enumerate(self.frames)}
        obs_f, obs_s, ys = [], [], []
        for si, s in enumerate(self.tracks):
            for f, y in sorted(problem.observations[s].items()):
                obs_f.append(frame_pos[f])
                obs_s.append(si)
                ys.append(y)
        self.obs_f = np.array(obs_f, dtype=np.int64)
        self.obs_s = np.array(obs_s, dtype=np.int64)
        self.y = np.array(ys, dtype=np.float64).reshape(-1, 3)
        anchor = problem.anchor_frame
        self.anchor = frame_pos.get(anchor) if anchor is not None else None
        # frames with variables: observed and not anchored
        observed = np.zeros(len(self.frames), dtype=bool)
        observed[self.obs_f] = True
        if self.anchor is not None:
            observed[self.anchor] = False
        self.var_of = -np.ones(len(self.frames), dtype=np.int64)
        self.var_of[observed] = np.arange(int(observed.sum()))
        self.n_var = int(observed.sum())

        prior_frames = sorted(f for f in problem.priors if f in frame_pos)
        self.prior_f = np.array([frame_pos[f] for f in prior_frames], dtype=np.int64)
        self.prior_R = np.array(
            [problem.priors[f].matrix for f in prior_frames], dtype=np.float64
        ).reshape(-1, 3, 3)
        self.prior_weight = problem.prior_weight if prior_frames else 0.0


def _residuals(R: np.ndarray, X: np.ndarray, lay: _Layout) -> np.ndarray:
    return lay.y - np.einsum("nij,nj->ni", R[lay.obs_f], X[lay.obs_s])


def _robust_weights(r: np.ndarray, delta: Optional[float]) -> np.ndarray:
    """IRLS weights of the Huber loss on residual norms"""
    if delta is None:
        return np.ones(len(r))
    e = np.linalg.norm(r, axis=1)
    return np.where(e <= delta, 1.0, delta / np.maximum(e, 1e-300))


def _cost(R, X, lay, delta: Optional[float] = None) -> float:
    r = _residuals(R, X, lay)
    if delta is None:
        cost = float(np.sum(r * r))
    else:
        e = np.linalg.norm(r, axis=1)
        cost = float(np.sum(np.where(e <= delta, e * e, 2.0 * delta * e - delta * delta)))
    if lay.prior_weight > 0.0:
        cost += lay.prior_weight * float(np.sum((R[lay.prior_f] - lay.prior_R) ** 2))
    return cost


def bundle_cost(problem: BAProblem, huber_delta: Optional[float] = None) -> float:
    """
    sum rho(||y_is - R_i X_s||) + w sum ||R_k - R~_k||_F^2

    rho is the square, or the Huber loss with threshold ``huber_delta``;
    the second sum runs over the absolute-rotation priors of the problem.
    """
    lay = _Layout(problem)
    R = np.array([problem.attitudes[f].matrix for f in lay.frames]).reshape(-1, 3, 3)
    X = np.array([problem.directions[s] for s in lay.tracks]).reshape(-1, 3)
    if lay.y.size == 0:
        return 0.0
    return _cost(R, X, lay, huber_delta)


# ==================== SOLVER ====================

def _step(R, X, lay: _Layout, lam: float, delta: Optional[float] = None):
    """
    Damped (reweighted) Gauss-Newton step.

    Returns:
        (phi (n_frames, 3), xi (n_tracks, 2), gradient inf-norm, tangent bases)
    """
    n_f, n_s = len(lay.frames), len(lay.tracks)
    Rf = R[lay.obs_f]
    RX = np.einsum("nij,nj->ni", Rf, X[lay.obs_s])
    r = lay.y - RX
    w = _robust_weights(r, delta)
    B = tangent_basis(X)
    J_R = hat_many(RX)
    J_X = -Rf @ B[lay.obs_s]

    H_RR = np.zeros((n_f, 3, 3))
    H_XX = np.zeros((n_s, 2, 2))
    g_R = np.zeros((n_f, 3))
    g_X = np.zeros((n_s, 2))
    np.add.at(H_RR, lay.obs_f, w[:, None, None] * np.einsum("nki,nkj->nij", J_R, J_R))
    np.add.at(H_XX, lay.obs_s, w[:, None, None] * np.einsum("nki,nkj->nij", J_X, J_X))
    np.add.at(g_R, lay.obs_f, w[:, None] * np.einsum("nki,nk->ni", J_R, r))
    np.add.at(g_X, lay.obs_s, w[:, None] * np.einsum("nki,nk->ni", J_X, r))
    H_RX = w[:, None, None] * np.einsum("nki,nkj->nij", J_R, J_X)

    if lay.prior_weight > 0.0:
        # E = R - R~, dE/dphi has columns -hat(c_j): J^T J = 2 I, J^T E = -sum c_j x c~_j
        Rp = R[lay.prior_f]
        g_p = -np.sum(np.cross(Rp, lay.prior_R, axis=1), axis=2)
        np.add.at(g_R, lay.prior_f, lay.prior_weight * g_p)
        np.add.at(H_RR, lay.prior_f, 2.0 * lay.prior_weight * np.eye(3))

    var = lay.var_of[lay.obs_f]
    free = var >= 0
    grad = max(
        float(np.max(np.abs(g_R[lay.var_of >= 0]))) if lay.n_var else 0.0,
        float(np.max(np.abs(g_X))) if n_s else 0.0,
    )

    # Marquardt damping on the block diagonals
    d_R = np.einsum("nii->ni", H_RR)
    d_X = np.einsum("nii->ni", H_XX)
    H_RR = H_RR + lam * np.einsum("ni,ij->nij", np.maximum(d_R, 1e-12), np.eye(3))
    H_XX = H_XX + lam * np.einsum("ni,ij->nij", np.maximum(d_X, 1e-12), np.eye(2))
    H_XX_inv = np.linalg.inv(H_XX)

    n = 3 * lay.n_var
    phi = np.zeros((n_f, 3))
    if n:
        a3 = np.arange(3)
        a2 = np.arange(2)
        vf = np.nonzero(lay.var_of >= 0)[0]
        vv = lay.var_of[vf]
        rows = (3 * vv[:, None, None] + a3[None, :, None]).repeat(3, axis=2).ravel()
        cols = (3 * vv[:, None, None] + a3[None, None, :]).repeat(3, axis=1).ravel()
        A = sparse.coo_matrix((H_RR[vf].ravel(), (rows, cols)), shape=(n, n))

        of, os_, blk = var[free], lay.obs_s[free], H_RX[free]
        c_rows = (3 * of[:, None, None] + a3[None, :, None]).repeat(2, axis=2).ravel()
        c_cols = (2 * os_[:, None, None] + a2[None, None, :]).repeat(3, axis=1).ravel()
        C = sparse.coo_matrix((blk.ravel(), (c_rows, c_cols)), shape=(n, 2 * n_s)).tocsr()
        s_idx = np.arange(n_s)
        d_rows = (2 * s_idx[:, None, None] + a2[None, :, None]).repeat(2, axis=2).ravel()
        d_cols = (2 * s_idx[:, None, None] + a2[None, None, :]).repeat(2, axis=1).ravel()
        Dinv = sparse.coo_matrix((H_XX_inv.ravel(), (d_rows, d_cols)), shape=(2 * n_s, 2 * n_s)).tocsr()

        CD = C @ Dinv
        S = (A.tocsr() - CD @ C.T).tocsc()
        rhs = -(g_R[vf].ravel() - CD @ g_X.ravel())
        sol = spsolve(S, rhs)
        phi[vf] = np.asarray(sol).reshape(-1, 3)

    # back-substitute the star increments
    rhs_X = -g_X.copy()
    contrib = np.einsum("nij,ni->nj", H_RX, phi[lay.obs_f])
    np.add.at(rhs_X, lay.obs_s, -contrib)
    xi = np.einsum("nij,nj->ni", H_XX_inv, rhs_X)
    return phi, xi, grad, B


@traceable(name="bundle_adjust")
def bundle_adjust(problem: BAProblem, config: Optional[BundleConfig] = None) -> BAResult:
    """
    Levenberg-Marquardt refinement of attitudes and star directions.

    Only cost-decreasing steps are accepted. Frames without observations
    and the anchor frame keep their input attitude.

    Raises:
        ValueError: no tracks, or an observation in a frame without attitude
        NumericalFailureError: the cost became non-finite
    """
    config = config or BundleConfig()
    if not problem.observations:
        raise ValueError("bundle adjustment needs at least one track")
    for s, obs in problem.observations.items():
        missing = [f for f in obs if f not in problem.attitudes]
        if missing:
            raise ValueError(f"track {s} observed in frames without attitude: {missing}")

    dropped: List[int] = []
    directions = dict(problem.directions)
    if any(s not in directions for s in problem.observations):
        init, dropped = init_star_directions(
            problem.attitudes, {s: o for s, o in problem.observations.items() if s not in directions}
        )
        directions.update(init)
        problem = problem.model_copy(update={"directions": directions})

    lay = _Layout(problem)
    R = np.array([problem.attitudes[f].matrix for f in lay.frames]).reshape(-1, 3, 3)
    X = np.array([directions[s] for s in lay.tracks]).reshape(-1, 3)
    delta = config.huber_delta
    cost = _cost(R, X, lay, delta)
    initial_cost = cost
    if not np.isfinite(cost):
        raise NumericalFailureError("non-finite initial cost", dump={"iter": 0, "cost": cost})

    lam = config.initial_lambda
    log: List[BAIteration] = []
    stop_reason = "max_iterations"
    it = 0

    while True:
        if cost == 0.0:
            stop_reason = "zero_cost"
            break
        if it >= config.max_iterations:
            break
        phi, xi, grad, B = _step(R, X, lay, lam, delta)
        if grad < config.gradient_tolerance:
            stop_reason = "gradient_tolerance"
            break
        it += 1
        R_new = exp_so3(phi) @ R
        X_new = retract_direction(X, B, xi)
        cost_new = _cost(R_new, X_new, lay, delta)
        if not np.isfinite(cost_new):
            raise NumericalFailureError(
                f"non-finite cost at iteration {it}",
                dump={"iter": it, "cost": cost, "lambda": lam, "step_norm": float(np.linalg.norm(phi))},
            )
        if cost_new < cost:
            decrease = (cost - cost_new) / cost
            R, X, cost = R_new, X_new, cost_new
            log.append(BAIteration(iter=it, cost=cost, lam=lam, accepted=True))
            lam = max(lam / LAMBDA_DOWN, 1e-15)
            if decrease < config.function_tolerance:
                stop_reason = "function_tolerance"
                break
        else:
            log.append(BAIteration(iter=it, cost=cost_new, lam=lam, accepted=False))
            lam *= LAMBDA_UP
            if lam > MAX_LAMBDA:
                stop_reason = "damping_limit"
                break

    attitudes = dict(problem.attitudes)
    for k, f in enumerate(lay.frames):
        if k != lay.anchor and lay.var_of[k] >= 0:
            attitudes[f] = Rotation(matrix=project_to_so3(R[k]))
    refined = {s: X[k] / np.linalg.norm(X[k]) for k, s in enumerate(lay.tracks)}

    logger.info(
        f"🎯 Bundle adjustment: {len(lay.frames)} frames, {len(lay.tracks)} tracks, "
        f"{len(lay.y)} observations; cost {initial_cost:.3e} -> {cost:.3e} "
        f"after {it} iterations ({stop_reason})"
    )
    return BAResult(
        attitudes=attitudes,
        directions=refined,
        initial_cost=initial_cost,
        final_cost=cost,
        iterations=it,
        converged=stop_reason != "max_iterations",
        stop_reason=stop_reason,
        log=log,
        dropped_tracks=dropped,
    )
