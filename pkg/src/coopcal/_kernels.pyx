# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the matching hot loops.

Semantics are identical to ``coopcal._kernels_py``; see that module for the
reference description of each routine.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def coarse_match_all(double[:, :, ::1] P, double[:, :, ::1] Q,
                     double cos_thr, double sigma2, int min_support):
    cdef Py_ssize_t ne = P.shape[0], nc = Q.shape[0]
    cdef Py_ssize_t i, j, a, b
    cdef double ux, uy, vx, vy, nu, nv, dot, l1p, l1m
    cdef int cnt_p, cnt_m
    L_arr = np.zeros((ne, nc, ne, nc), dtype=np.uint8)
    S_arr = np.ones((ne, nc), dtype=np.int8)
    plus_arr = np.zeros((ne, nc), dtype=np.uint8)
    minus_arr = np.zeros((ne, nc), dtype=np.uint8)
    cdef unsigned char[:, :, :, ::1] L = L_arr
    cdef signed char[:, ::1] S = S_arr
    cdef unsigned char[:, ::1] plus = plus_arr
    cdef unsigned char[:, ::1] minus = minus_arr
    # Context column norms, computed once.
    pn_arr = np.sqrt(np.asarray(P)[..., 0] ** 2 + np.asarray(P)[..., 1] ** 2)
    qn_arr = np.sqrt(np.asarray(Q)[..., 0] ** 2 + np.asarray(Q)[..., 1] ** 2)
    cdef double[:, ::1] pn = pn_arr
    cdef double[:, ::1] qn = qn_arr

    for i in range(ne):
        for j in range(nc):
            cnt_p = 0
            cnt_m = 0
            for a in range(ne):
                if a == i:
                    continue
                nu = pn[i, a]
                if nu == 0.0:
                    continue
                ux = P[i, a, 0]
                uy = P[i, a, 1]
                for b in range(nc):
                    plus[a, b] = 0
                    minus[a, b] = 0
                    if b == j:
                        continue
                    nv = qn[j, b]
                    if nv == 0.0:
                        continue
                    vx = Q[j, b, 0]
                    vy = Q[j, b, 1]
                    dot = ux * vx + uy * vy
                    # angular gate first; length only for survivors
                    if fabs(dot) / (nu * nv) < cos_thr:
                        continue
                    l1p = fabs(ux - vx) + fabs(uy - vy)
                    l1m = fabs(ux + vx) + fabs(uy + vy)
                    if l1p <= sigma2:
                        plus[a, b] = 1
                        cnt_p += 1
                    if l1m <= sigma2:
                        minus[a, b] = 1
                        cnt_m += 1
            if cnt_p >= cnt_m:
                if cnt_p >= min_support:
                    for a in range(ne):
                        if a == i:
                            continue
                        for b in range(nc):
                            if b != j and plus[a, b]:
                                L[i, j, a, b] = 1
            else:
                S[i, j] = -1
                if cnt_m >= min_support:
                    for a in range(ne):
                        if a == i:
                            continue
                        for b in range(nc):
                            if b != j and minus[a, b]:
                                L[i, j, a, b] = 1
    return L_arr, S_arr


def consensus_filter(unsigned char[:, :, :, ::1] L, int min_votes):
    cdef Py_ssize_t ne = L.shape[0], nc = L.shape[1]
    cdef Py_ssize_t i, j, m, n, cnt
    cdef int votes
    out_arr = np.zeros((ne, nc, ne, nc), dtype=np.uint8)
    cdef unsigned char[:, :, :, ::1] out = out_arr
    ea_arr = np.empty(ne * nc, dtype=np.intp)
    eb_arr = np.empty(ne * nc, dtype=np.intp)
    cdef Py_ssize_t[::1] ea = ea_arr
    cdef Py_ssize_t[::1] eb = eb_arr

    for i in range(ne):
        for j in range(nc):
            cnt = 0
            for m in range(ne):
                for n in range(nc):
                    if L[i, j, m, n]:
                        ea[cnt] = m
                        eb[cnt] = n
                        cnt += 1
            for m in range(cnt):
                votes = 1  # the pair's own vote
                for n in range(cnt):
                    votes += L[ea[n], eb[n], ea[m], eb[m]]
                if votes >= min_votes:
                    out[i, j, ea[m], eb[m]] = 1
    return out_arr
