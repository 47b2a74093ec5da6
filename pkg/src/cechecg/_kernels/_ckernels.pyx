# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels: minimal enclosing balls and Z/2 column reduction.

Mirrors ``_pykernels`` operation for operation; the two are cross-checked in
the test suite and compared in ``benchmarks/bench_kernels.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libcpp.vector cimport vector
from libcpp.algorithm cimport set_symmetric_difference
from libcpp.iterator cimport back_inserter

cnp.import_array()

DEF MAXK = 16
DEF MAXD = 16

cdef double IN_BALL_EPS = 1e-12
cdef double PIVOT_EPS = 1e-12


cdef double _circumsphere(const double[:, ::1] pts, int* support, int m,
                          int dim, double* center) noexcept nogil:
    cdef double diffs[MAXK][MAXD]
    cdef double a[MAXK][MAXK + 1]
    cdef double lam[MAXK]
    cdef int cols[MAXK]
    cdef int i, j, c, r, k, bi, bj, rank, tmp
    cdef double v, best, scale, piv, f, s, r2, d2, t
    if m == 0:
        return -1.0
    if m == 1:
        for c in range(dim):
            center[c] = pts[support[0], c]
        return 0.0
    k = m - 1
    for i in range(k):
        for c in range(dim):
            diffs[i][c] = pts[support[i + 1], c] - pts[support[0], c]
    scale = 0.0
    for i in range(k):
        for j in range(k):
            s = 0.0
            for c in range(dim):
                s = s + diffs[i][c] * diffs[j][c]
            a[i][j] = 2.0 * s
            if fabs(a[i][j]) > scale:
                scale = fabs(a[i][j])
        s = 0.0
        for c in range(dim):
            s = s + diffs[i][c] * diffs[i][c]
        a[i][k] = s
        cols[i] = i
        lam[i] = 0.0
    rank = 0
    for r in range(k):
        best = 0.0
        bi = -1
        bj = -1
        for i in range(r, k):
            for j in range(r, k):
                v = fabs(a[i][cols[j]])
                if v > best:
                    best = v
                    bi = i
                    bj = j
        if best <= PIVOT_EPS * scale or best == 0.0:
            break
        if bi != r:
            for j in range(k + 1):
                t = a[r][j]
                a[r][j] = a[bi][j]
                a[bi][j] = t
        tmp = cols[r]
        cols[r] = cols[bj]
        cols[bj] = tmp
        piv = a[r][cols[r]]
        for i in range(r + 1, k):
            f = a[i][cols[r]] / piv
            if f != 0.0:
                for j in range(r, k):
                    a[i][cols[j]] = a[i][cols[j]] - f * a[r][cols[j]]
                a[i][k] = a[i][k] - f * a[r][k]
        rank += 1
    for r in range(rank - 1, -1, -1):
        s = a[r][k]
        for j in range(r + 1, rank):
            s = s - a[r][cols[j]] * lam[cols[j]]
        lam[cols[r]] = s / a[r][cols[r]]
    for c in range(dim):
        s = pts[support[0], c]
        for i in range(k):
            s = s + lam[i] * diffs[i][c]
        center[c] = s
    r2 = 0.0
    for i in range(m):
        d2 = 0.0
        for c in range(dim):
            d2 = d2 + (pts[support[i], c] - center[c]) ** 2
        if d2 > r2:
            r2 = d2
    return r2


cdef double _welzl(const double[:, ::1] pts, int n, int* support, int m,
                   int dim, double* center) noexcept nogil:
    cdef double r2, d2
    cdef int c
    if n == 0 or m == dim + 1:
        return _circumsphere(pts, support, m, dim, center)
    r2 = _welzl(pts, n - 1, support, m, dim, center)
    if r2 >= 0.0:
        d2 = 0.0
        for c in range(dim):
            d2 = d2 + (pts[n - 1, c] - center[c]) ** 2
        if d2 <= r2 * (1.0 + IN_BALL_EPS) + 1e-300:
            return r2
    support[m] = n - 1
    return _welzl(pts, n - 1, support, m + 1, dim, center)


def min_enclosing_ball(points):
    """Welzl's recursion on the rows of ``points``. Returns (center, radius)."""
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef int n = pts.shape[0], dim = pts.shape[1]
    cdef int support[MAXK]
    cdef double center[MAXD]
    if n > MAXK or dim > MAXD:
        raise ValueError(f"compiled kernel limited to {MAXK} points in <= {MAXD} dims")
    r2 = _welzl(pts, n, support, 0, dim, center)
    return np.array([center[c] for c in range(dim)], dtype=np.float64), sqrt(max(r2, 0.0))


def meb_diameters(coords, simplices):
    """Diameter (2 x radius) of the minimal enclosing ball of every row of
    vertex indices in ``simplices``."""
    cdef double[:, ::1] xyz = np.ascontiguousarray(coords, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] simp = np.ascontiguousarray(simplices, dtype=np.int64)
    cdef Py_ssize_t rows = simp.shape[0], row
    cdef int k = simp.shape[1], dim = xyz.shape[1], i, c
    cdef double[:, ::1] local = np.empty((max(k, 1), max(dim, 1)), dtype=np.float64)
    cdef double[::1] out = np.empty(rows, dtype=np.float64)
    cdef int support[MAXK]
    cdef double center[MAXD]
    cdef double r2
    if k > MAXK or dim > MAXD:
        raise ValueError(f"compiled kernel limited to {MAXK} points in <= {MAXD} dims")
    with nogil:
        for row in range(rows):
            for i in range(k):
                for c in range(dim):
                    local[i, c] = xyz[simp[row, i], c]
            r2 = _welzl(local, k, support, 0, dim, center)
            out[row] = 2.0 * sqrt(r2 if r2 > 0.0 else 0.0)
    return np.asarray(out)


def reduce_boundary(indptr, indices):
    """Standard left-to-right Z/2 column reduction; returns the ``low`` array."""
    cdef cnp.int64_t[::1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t m = ptr.shape[0] - 1, j, p, other
    cdef vector[vector[cnp.int64_t]] reduced
    cdef vector[cnp.int64_t] col, tmp
    cdef cnp.int64_t pivot
    low = np.full(m, -1, dtype=np.int64)
    owner = np.full(m, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] low_v = low
    cdef cnp.int64_t[::1] owner_v = owner
    reduced.resize(m)
    with nogil:
        for j in range(m):
            col.clear()
            for p in range(ptr[j], ptr[j + 1]):
                col.push_back(idx[p])
            _sort(col)
            while col.size() > 0:
                pivot = col.back()
                other = owner_v[pivot]
                if other < 0:
                    owner_v[pivot] = j
                    low_v[j] = pivot
                    reduced[j].swap(col)
                    break
                tmp.clear()
                set_symmetric_difference(col.begin(), col.end(),
                                         reduced[other].begin(), reduced[other].end(),
                                         back_inserter(tmp))
                col.swap(tmp)
    return low


cdef extern from "<algorithm>" namespace "std" nogil:
    void std_sort "std::sort"[Iter](Iter first, Iter last)


cdef inline void _sort(vector[cnp.int64_t]& v) noexcept nogil:
    std_sort(v.begin(), v.end())
