# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: candidate scoring, rank counting, path walks.

Operation order matches ``_fallback.py`` exactly; build with
``-ffp-contract=off`` so the compiler does not fuse multiply-adds.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdint cimport int64_t
from libcpp.vector cimport vector

cnp.import_array()

cdef enum:
    TRANSE = 0
    DISTMULT = 1
    COMPLEX = 2
    SIMPLE = 3
    HOLE = 4
    ROTATE = 5


cdef inline double _score_one(int kind, const double* h, const double* r,
                              const double* t, int norm_p, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double acc = 0.0, acc2 = 0.0, v, u, w, c
    if kind == TRANSE:
        for i in range(d):
            v = (h[i] + r[i]) - t[i]
            if norm_p == 1:
                acc += fabs(v)
            else:
                acc += v * v
        if norm_p == 1:
            return -acc
        return -sqrt(acc)
    elif kind == DISTMULT:
        for i in range(d):
            acc += (h[i] * t[i]) * r[i]  # h*t first keeps the score exactly symmetric
        return acc
    elif kind == COMPLEX:
        for i in range(d):
            acc += (((h[i] * r[i]) - (h[d + i] * r[d + i])) * t[i]
                    + ((h[i] * r[d + i]) + (h[d + i] * r[i])) * t[d + i])
        return acc
    elif kind == SIMPLE:
        for i in range(d):
            acc += (h[i] * r[i]) * t[d + i]
            acc2 += (t[i] * r[d + i]) * h[d + i]
        return 0.5 * (acc + acc2)
    elif kind == HOLE:
        for k in range(d):
            c = 0.0
            for i in range(d):
                c += h[i] * t[(i + k) % d]
            acc += r[k] * c
        return acc
    else:
        for i in range(d):
            u = ((h[i] * r[i]) - (h[d + i] * r[d + i])) - t[i]
            w = ((h[i] * r[d + i]) + (h[d + i] * r[i])) - t[d + i]
            acc += sqrt(u * u + w * w)
        return -acc


cdef inline void _hole4(const double** hs, const double** ts, const double* r, Py_ssize_t d,
                        double* out) noexcept nogil:
    cdef double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, c0, c1, c2, c3
    cdef Py_ssize_t k, i, j
    for k in range(d):
        c0 = c1 = c2 = c3 = 0.0
        for i in range(d):
            j = i + k
            if j >= d:
                j -= d
            c0 += hs[0][i] * ts[0][j]
            c1 += hs[1][i] * ts[1][j]
            c2 += hs[2][i] * ts[2][j]
            c3 += hs[3][i] * ts[3][j]
        a0 += r[k] * c0
        a1 += r[k] * c1
        a2 += r[k] * c2
        a3 += r[k] * c3
    out[0] = a0
    out[1] = a1
    out[2] = a2
    out[3] = a3


def score_candidates(int kind, const double[::1] source, const double[::1] relation,
                     const double[:, ::1] candidates, bint tail, int norm_p, Py_ssize_t dim):
    if kind < 0 or kind > 5:
        raise ValueError(f"unknown model kind code {kind}")
    cdef Py_ssize_t n = candidates.shape[0], e
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if n == 0:
        return out
    cdef const double* hs[4]
    cdef const double* ts[4]
    cdef Py_ssize_t j, start = 0
    with nogil:
        if kind == HOLE:
            # four independent accumulator chains; per-candidate order is unchanged
            while start + 4 <= n:
                for j in range(4):
                    hs[j] = &source[0] if tail else &candidates[start + j, 0]
                    ts[j] = &candidates[start + j, 0] if tail else &source[0]
                _hole4(hs, ts, &relation[0], dim, &o[start])
                start += 4
        for e in range(start, n):
            if tail:
                o[e] = _score_one(kind, &source[0], &relation[0], &candidates[e, 0], norm_p, dim)
            else:
                o[e] = _score_one(kind, &candidates[e, 0], &relation[0], &source[0], norm_p, dim)
    return out


def rank_counts(const double[::1] scores, Py_ssize_t target, filtered):
    cdef Py_ssize_t n = scores.shape[0], e
    cdef double st = scores[target], s
    cdef Py_ssize_t g = 0, t = 0, b = 0, gf = 0, tf = 0, bf = 0
    cdef const unsigned char[::1] mask
    cdef bint has_mask = filtered is not None
    cdef bint drop
    if has_mask:
        mask = np.ascontiguousarray(filtered, dtype=np.uint8)
    with nogil:
        for e in range(n):
            if e == target:
                continue
            s = scores[e]
            drop = has_mask and mask[e] != 0
            if s > st:
                g += 1
                if not drop:
                    gf += 1
            elif s == st:
                t += 1
                if not drop:
                    tf += 1
                if e < target:
                    b += 1
                    if not drop:
                        bf += 1
    return g, t, b, gf, tf, bf


cdef inline Py_ssize_t _lower_bound(const int64_t[::1] nbr, Py_ssize_t lo, Py_ssize_t hi,
                                    int64_t value) noexcept nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if nbr[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


def paths_between(const int64_t[::1] indptr, const int64_t[::1] nbr, const int64_t[::1] tok,
                  const int64_t[::1] eid, int64_t source, int64_t target, int max_len,
                  int64_t excluded, int64_t base):
    cdef vector[int64_t] out
    cdef Py_ssize_t j1, j2, j3, hi
    cdef int64_t n1, n2, e1, e2, e3, c1, c2
    with nogil:
        for j1 in range(indptr[source], indptr[source + 1]):
            e1 = eid[j1]
            if e1 == excluded:
                continue
            n1 = nbr[j1]
            c1 = tok[j1] + 1
            if n1 == target:
                out.push_back(c1)
            if max_len < 2:
                continue
            for j2 in range(indptr[n1], indptr[n1 + 1]):
                e2 = eid[j2]
                if e2 == excluded or e2 == e1:
                    continue
                n2 = nbr[j2]
                c2 = c1 + (tok[j2] + 1) * base
                if n2 == target:
                    out.push_back(c2)
                if max_len < 3:
                    continue
                # rows are sorted by neighbour id: jump to the target's run
                hi = indptr[n2 + 1]
                j3 = _lower_bound(nbr, indptr[n2], hi, target)
                while j3 < hi and nbr[j3] == target:
                    e3 = eid[j3]
                    if e3 != excluded and e3 != e2:
                        out.push_back(c2 + (tok[j3] + 1) * base * base)
                    j3 += 1
    res = np.empty(out.size(), dtype=np.int64)
    cdef int64_t[::1] r = res
    cdef Py_ssize_t i
    for i in range(<Py_ssize_t>out.size()):
        r[i] = out[i]
    return res


def walks_from(const int64_t[::1] indptr, const int64_t[::1] nbr, const int64_t[::1] tok,
               const int64_t[::1] eid, int64_t source, int max_len, int64_t excluded,
               int64_t base):
    cdef vector[int64_t] ends, codes
    cdef Py_ssize_t j1, j2, j3
    cdef int64_t n1, n2, e1, e2, e3, c1, c2
    with nogil:
        for j1 in range(indptr[source], indptr[source + 1]):
            e1 = eid[j1]
            if e1 == excluded:
                continue
            n1 = nbr[j1]
            c1 = tok[j1] + 1
            ends.push_back(n1)
            codes.push_back(c1)
            if max_len < 2:
                continue
            for j2 in range(indptr[n1], indptr[n1 + 1]):
                e2 = eid[j2]
                if e2 == excluded or e2 == e1:
                    continue
                n2 = nbr[j2]
                c2 = c1 + (tok[j2] + 1) * base
                ends.push_back(n2)
                codes.push_back(c2)
                if max_len < 3:
                    continue
                for j3 in range(indptr[n2], indptr[n2 + 1]):
                    e3 = eid[j3]
                    if e3 == excluded or e3 == e2:
                        continue
                    ends.push_back(nbr[j3])
                    codes.push_back(c2 + (tok[j3] + 1) * base * base)
    cdef Py_ssize_t m = ends.size(), i
    end_arr = np.empty(m, dtype=np.int64)
    code_arr = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] ea = end_arr, ca = code_arr
    for i in range(m):
        ea[i] = ends[i]
        ca[i] = codes[i]
    return end_arr, code_arr
