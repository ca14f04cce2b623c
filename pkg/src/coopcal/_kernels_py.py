"""Reference numpy implementations of the matching hot loops.

These define the semantics; ``coopcal._kernels`` (Cython) must reproduce them
bit for bit. Both are selected through :mod:`coopcal.kernels`.
"""

from __future__ import annotations

import numpy as np


def coarse_match_all(P, Q, cos_thr, sigma2, min_support):
    """Local correspondence matrices for every center pair.

    Parameters
    ----------
    P, Q : ndarray, shape (Ne, Ne, 2) and (Nc, Nc, 2)
        Dense context tensors; ``P[i, a]`` is neighbor ``a`` seen from center ``i``.
        Diagonals are ignored.
    cos_thr : float
        Angular gate: a column pair survives when ``|u.v| / (|u||v|) >= cos_thr``.
    sigma2 : float
        Length gate on ``||u - s v||_1`` where ``s`` is the center heading sign.
    min_support : int
        Matrices with fewer surviving entries are zeroed.

    Returns
    -------
    L : ndarray of uint8, shape (Ne, Nc, Ne, Nc)
    sign : ndarray of int8, shape (Ne, Nc)
        +1 when the coop center's context is used as-is, -1 when negated.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    ne, nc = P.shape[0], Q.shape[0]
    L = np.zeros((ne, nc, ne, nc), dtype=np.uint8)
    sign = np.ones((ne, nc), dtype=np.int8)
    if ne == 0 or nc == 0:
        return L, sign

    pn = np.sqrt(P[..., 0] ** 2 + P[..., 1] ** 2)
    qn = np.sqrt(Q[..., 0] ** 2 + Q[..., 1] ** 2)
    qvalid = qn != 0.0
    qvalid[np.arange(nc), np.arange(nc)] = False
    vx, vy = Q[..., 0], Q[..., 1]  # (j, b)

    for i in range(ne):
        pvalid = pn[i] != 0.0
        pvalid[i] = False
        ux = P[i, :, 0][None, :, None]  # (1, a, 1)
        uy = P[i, :, 1][None, :, None]
        qx = vx[:, None, :]  # (j, 1, b)
        qy = vy[:, None, :]
        dot = ux * qx + uy * qy
        denom = pn[i][None, :, None] * qn[:, None, :]
        valid = pvalid[None, :, None] & qvalid[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = np.abs(dot) / denom >= cos_thr
        gate = valid & ang
        plus = gate & (np.abs(ux - qx) + np.abs(uy - qy) <= sigma2)
        minus = gate & (np.abs(ux + qx) + np.abs(uy + qy) <= sigma2)
        cp = plus.sum(axis=(1, 2))
        cm = minus.sum(axis=(1, 2))
        use_minus = cm > cp
        chosen = np.where(use_minus[:, None, None], minus, plus)
        counts = np.where(use_minus, cm, cp)
        chosen &= (counts >= min_support)[:, None, None]
        L[i] = chosen
        sign[i] = np.where(use_minus, -1, 1)
    return L, sign


def consensus_filter(L, min_votes):
    """Keep an entry of ``L[i, j]`` only if enough pairs of ``L[i, j]`` endorse it.

    An entry ``(a, b)`` of the local matrix centered at ``(i, j)`` collects one
    vote of its own plus one vote from every other entry ``(k, h)`` of the same
    matrix whose own local matrix ``L[k, h]`` contains ``(a, b)``.
    """
    L = np.ascontiguousarray(L, dtype=np.uint8)
    ne, nc = L.shape[:2]
    flat = L.reshape(ne * nc, ne * nc)
    out = np.zeros_like(flat)
    for row in np.flatnonzero(flat.any(axis=1)):
        idx = np.flatnonzero(flat[row])
        sub = flat[np.ix_(idx, idx)]
        votes = 1 + sub.sum(axis=0, dtype=np.int64)
        out[row, idx[votes >= min_votes]] = 1
    return out.reshape(L.shape)
