"""Classic point-to-point ICP on box centers (comparison baseline)."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .estimator import DegenerateConfigurationError, weighted_procrustes_se2
from .geometry import RigidTransform2
from .matcher import MatchSet


def _nearest(ego: np.ndarray, moved: np.ndarray, reject_radius: float):
    d = np.linalg.norm(moved[:, None, :] - ego[None, :, :], axis=2)
    nn = np.argmin(d, axis=1)
    dist = d[np.arange(len(moved)), nn]
    keep = dist <= reject_radius
    return nn[keep], np.flatnonzero(keep), dist[keep]


def icp_associate(
    ego_pts,
    coop_pts,
    init: Optional[RigidTransform2] = None,
    max_iters: int = 50,
    tol: float = 1e-6,
    reject_radius: float = 5.0,
    trace: Optional[Callable[[int, float], None]] = None,
) -> tuple[RigidTransform2, MatchSet]:
    """Align ``coop_pts`` onto ``ego_pts``.

    Every coop point is paired with its nearest ego point under the current
    transform (pairs farther than ``reject_radius`` are dropped), then the
    transform is refit on those pairs. Stops once no point moves more than
    ``tol`` or after ``max_iters``. ``trace(iteration, sse)`` receives the
    sum of squared matched residuals right after each correspondence step.

    The returned match set keeps, for each ego point, only its closest coop
    partner so that it is a partial injection.
    """
    ego = np.asarray(ego_pts, dtype=float).reshape(-1, 2)
    coop = np.asarray(coop_pts, dtype=float).reshape(-1, 2)
    if len(ego) == 0 or len(coop) == 0:
        raise ValueError("icp_associate needs non-empty point sets")
    init = init or RigidTransform2.identity()
    t = init
    for it in range(max_iters):
        moved = t.apply(coop)
        ia, ib, dist = _nearest(ego, moved, reject_radius)
        if len(ia) == 0:
            return init, MatchSet(status="no_match")
        if trace is not None:
            trace(it, float(np.sum(dist**2)))
        try:
            t_new = weighted_procrustes_se2(ego[ia], coop[ib])
        except DegenerateConfigurationError:
            break
        step = float(np.max(np.linalg.norm(t_new.apply(coop) - moved, axis=1)))
        t = t_new
        if step < tol:
            break

    ia, ib, dist = _nearest(ego, t.apply(coop), reject_radius)
    if len(ia) == 0:
        return init, MatchSet(status="no_match")
    best: dict[int, tuple[float, int]] = {}
    for a, b, d in zip(ia.tolist(), ib.tolist(), dist.tolist()):
        if a not in best or d < best[a][0]:
            best[a] = (d, b)
    pairs = tuple(sorted((a, b) for a, (_, b) in best.items()))
    return t, MatchSet(pairs, support=len(pairs))
