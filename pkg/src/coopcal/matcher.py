"""Context-based inter-agent object association.

Pipeline for two detection sets already expressed in the ego frame:

1. canonicalize headings so that every object points forward-ish;
2. build dense contexts for both sides;
3. for every center pair ``(i, j)`` keep the neighbor pairs whose context
   vectors agree in direction (``S1 <= 1``) and then in L1 offset
   (``S2 <= 1``), trying both signs of the coop center's heading;
4. drop local correspondences not endorsed by other members of the same
   local matrix (global consensus);
5. drop one-to-many correspondences;
6. return the local matrix with the largest support, plus its center pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .context import DetectionSet, canonicalize_headings, context_tensor

STAGES = ("local", "filtered", "pruned")


@dataclass(frozen=True)
class MatchParams:
    sigma1: float = 0.35  # rad
    sigma2: float = 3.0  # m
    alpha: float = 1.0
    beta: float = 1.0
    min_local_support: int = 2
    consensus_min_votes: int = 2

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigma1 and sigma2 must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.min_local_support < 0 or self.consensus_min_votes < 0:
            raise ValueError("support and vote thresholds must be non-negative")

    @property
    def cos_threshold(self) -> float:
        return math.cos(min(self.sigma1, math.pi))


@dataclass(frozen=True)
class CorrespondenceMatrix:
    entries: np.ndarray  # uint8, (Ne, Nc)
    stage: str = "local"

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(*np.nonzero(self.entries))]

    def __len__(self) -> int:
        return int(np.count_nonzero(self.entries))


@dataclass(frozen=True)
class MatchSet:
    pairs: tuple[tuple[int, int], ...] = ()
    anchor: Optional[tuple[int, int]] = None
    support: int = 0
    status: str = "ok"
    flipped: bool = False

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def is_partial_injection(self) -> bool:
        ego = [p[0] for p in self.pairs]
        coop = [p[1] for p in self.pairs]
        return len(set(ego)) == len(ego) and len(set(coop)) == len(coop)


def angular_similarity(u, v, sigma1: float) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = float(np.hypot(*u)), float(np.hypot(*v))
    if nu == 0.0 or nv == 0.0:
        return math.inf
    c = min(1.0, abs(float(u @ v)) / (nu * nv))
    return math.acos(c) / sigma1


def length_similarity(u, v, sigma2: float) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.abs(u - v).sum()) / sigma2


def similarity(u, v, params: MatchParams) -> float:
    """Weighted sum of the angular and length terms."""
    return params.alpha * angular_similarity(u, v, params.sigma1) + params.beta * length_similarity(
        u, v, params.sigma2
    )


def coarse_match(Pi, Qj, params: MatchParams, flip: bool = False, shape=None) -> CorrespondenceMatrix:
    """Local correspondence matrix for a single center pair.

    ``Pi`` and ``Qj`` are :class:`~coopcal.context.ContextMatrix` objects.
    With ``flip`` the coop center's context is negated (its heading is
    assumed reversed). ``shape`` defaults to ``(len(Pi)+1, len(Qj)+1)``.
    """
    ne = Pi.vectors.shape[1] + 1 if shape is None else shape[0]
    nc = Qj.vectors.shape[1] + 1 if shape is None else shape[1]
    out = np.zeros((ne, nc), dtype=np.uint8)
    s = -1.0 if flip else 1.0
    count = 0
    for ca, a in enumerate(Pi.neighbor_indices):
        u = Pi.vectors[:, ca]
        for cb, b in enumerate(Qj.neighbor_indices):
            v = s * Qj.vectors[:, cb]
            if angular_similarity(u, v, params.sigma1) > 1.0:
                continue
            if length_similarity(u, v, params.sigma2) <= 1.0:
                out[a, b] = 1
                count += 1
    if count < params.min_local_support:
        out[:] = 0
    return CorrespondenceMatrix(out, "local")


def global_consensus(all_local: np.ndarray, params: MatchParams) -> np.ndarray:
    """Consensus-filtered local matrices, shape (Ne, Nc, Ne, Nc)."""
    L = np.ascontiguousarray(all_local, dtype=np.uint8)
    return kernels.consensus_filter(L, int(params.consensus_min_votes))


def prune_one_to_many(L1: np.ndarray) -> np.ndarray:
    """Zero every entry whose row or column (last two axes) holds more than one 1."""
    L1 = np.asarray(L1)
    rows = L1.sum(axis=-1, dtype=np.int64, keepdims=True)
    cols = L1.sum(axis=-2, dtype=np.int64, keepdims=True)
    return (L1.astype(bool) & (rows <= 1) & (cols <= 1)).astype(np.uint8)


def select_best(
    all_pruned: np.ndarray,
    residual: Optional[Callable[[int, int], float]] = None,
) -> MatchSet:
    """Pick the center pair whose matrix has the most entries.

    Ties go to the smallest ``residual(i, j)`` (summed length similarity of the
    matched pairs), then to the lexicographically smallest ``(i, j)``.
    """
    A = np.asarray(all_pruned)
    if A.size == 0:
        return MatchSet(status="no_match")
    counts = A.reshape(A.shape[0], A.shape[1], -1).sum(axis=-1, dtype=np.int64)
    best = int(counts.max())
    if best == 0:
        return MatchSet(status="no_match")
    cands = [(int(i), int(j)) for i, j in zip(*np.nonzero(counts == best))]  # row-major = lexicographic
    if len(cands) > 1 and residual is not None:
        res = [residual(i, j) for i, j in cands]
        k = min(range(len(cands)), key=lambda n: (res[n], cands[n]))
        i, j = cands[k]
    else:
        i, j = cands[0]
    pairs = [(int(a), int(b)) for a, b in zip(*np.nonzero(A[i, j]))]
    if (i, j) not in pairs:
        pairs.append((i, j))
    pairs.sort()
    return MatchSet(tuple(pairs), anchor=(i, j), support=best)


def local_matrices(ego_objs: Sequence, coop_objs: Sequence, params: MatchParams):
    """Contexts and stage-L matrices for canonicalized object lists.

    Returns ``(P, Q, L, sign)``; see :func:`coopcal._kernels_py.coarse_match_all`.
    """
    ego_objs = canonicalize_headings(ego_objs)
    coop_objs = canonicalize_headings(coop_objs)
    P = context_tensor(_pos(ego_objs), [o.heading for o in ego_objs])
    Q = context_tensor(_pos(coop_objs), [o.heading for o in coop_objs])
    L, sign = kernels.coarse_match_all(
        P, Q, params.cos_threshold, float(params.sigma2), int(params.min_local_support)
    )
    return P, Q, L, sign


def associate(
    ego: DetectionSet,
    coop_in_ego: DetectionSet,
    params: Optional[MatchParams] = None,
    consensus: bool = True,
) -> MatchSet:
    """Estimate co-visible pairs ``(ego_index, coop_index)``.

    ``coop_in_ego`` must already be expressed in the ego frame (see
    :func:`coopcal.context.to_ego_frame`). With ``consensus=False`` the raw
    local matrices compete directly (no consensus filter, no pruning), which
    is the ablation baseline and may yield one-to-many pairs.
    """
    params = params or MatchParams()
    if len(ego) < 3 or len(coop_in_ego) < 3:
        return MatchSet(status="insufficient_context")
    P, Q, L, sign = local_matrices(ego.objects, coop_in_ego.objects, params)
    if consensus:
        final = prune_one_to_many(global_consensus(L, params))
    else:
        final = L

    def residual(i: int, j: int) -> float:
        a, b = np.nonzero(final[i, j])
        d = P[i, a] - sign[i, j] * Q[j, b]
        return float(np.abs(d).sum()) / params.sigma2

    ms = select_best(final, residual)
    if ms.anchor is None:
        return ms
    i, j = ms.anchor
    return MatchSet(ms.pairs, ms.anchor, ms.support, ms.status, bool(sign[i, j] < 0))


def _pos(objs) -> np.ndarray:
    if not objs:
        return np.zeros((0, 2))
    return np.array([[o.x, o.y] for o in objs], dtype=float)
