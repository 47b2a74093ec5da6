"""Pure-Python kernels. Same contract as the compiled ``_ckernels`` module.

Used when the extension is not built, or when ``CECHECG_BACKEND=python``.
"""
import math

import numpy as np

# relative slack for the in-ball test and pivot cut-off in the circumsphere solve
_IN_BALL_EPS = 1e-12
_PIVOT_EPS = 1e-12


def _circumsphere(pts, support):
    """Smallest sphere through the support points, inside their affine hull.

    Returns (center, radius_sq). radius_sq < 0 encodes the empty ball.
    """
    m = len(support)
    if m == 0:
        return None, -1.0
    q0 = pts[support[0]]
    if m == 1:
        return list(q0), 0.0
    dim = len(q0)
    diffs = [[pts[s][c] - q0[c] for c in range(dim)] for s in support[1:]]
    k = m - 1
    # Gram system 2 (Qᵀ Q) λ = |q_i - q0|²
    a = [[2.0 * sum(diffs[i][c] * diffs[j][c] for c in range(dim)) for j in range(k)]
         + [sum(x * x for x in diffs[i])] for i in range(k)]
    lam = _solve_pseudo(a, k)
    center = [q0[c] + sum(lam[i] * diffs[i][c] for i in range(k)) for c in range(dim)]
    r2 = 0.0
    for s in support:
        d2 = sum((pts[s][c] - center[c]) ** 2 for c in range(dim))
        if d2 > r2:
            r2 = d2
    return center, r2


def _solve_pseudo(a, k):
    """Gaussian elimination with full pivoting on the augmented matrix ``a``.

    Near-zero pivots mark dependent directions; their unknowns are set to 0.
    For consistent rank-deficient systems (cospherical, affinely dependent
    support) every solution yields the same center, so this is sufficient.
    """
    scale = max((abs(a[i][j]) for i in range(k) for j in range(k)), default=0.0)
    cols = list(range(k))
    rank = 0
    for r in range(k):
        best, bi, bj = 0.0, -1, -1
        for i in range(r, k):
            for j in range(r, k):
                v = abs(a[i][cols[j]])
                if v > best:
                    best, bi, bj = v, i, j
        if best <= _PIVOT_EPS * scale or best == 0.0:
            break
        a[r], a[bi] = a[bi], a[r]
        cols[r], cols[bj] = cols[bj], cols[r]
        piv = a[r][cols[r]]
        for i in range(r + 1, k):
            f = a[i][cols[r]] / piv
            if f != 0.0:
                for j in range(r, k):
                    a[i][cols[j]] -= f * a[r][cols[j]]
                a[i][k] -= f * a[r][k]
        rank += 1
    lam = [0.0] * k
    for r in range(rank - 1, -1, -1):
        s = a[r][k]
        for j in range(r + 1, rank):
            s -= a[r][cols[j]] * lam[cols[j]]
        lam[cols[r]] = s / a[r][cols[r]]
    return lam


def _inside(p, center, r2):
    if r2 < 0.0:
        return False
    d2 = sum((p[c] - center[c]) ** 2 for c in range(len(p)))
    return d2 <= r2 * (1.0 + _IN_BALL_EPS) + 1e-300


def _welzl(pts, n, support, dim):
    if n == 0 or len(support) == dim + 1:
        return _circumsphere(pts, support)
    center, r2 = _welzl(pts, n - 1, support, dim)
    if _inside(pts[n - 1], center, r2):
        return center, r2
    return _welzl(pts, n - 1, support + [n - 1], dim)


def min_enclosing_ball(points):
    """Welzl's recursion on the rows of ``points`` (deterministic order).

    Returns (center ndarray, radius).
    """
    pts = [list(map(float, row)) for row in np.asarray(points, dtype=np.float64)]
    center, r2 = _welzl(pts, len(pts), [], len(pts[0]))
    return np.array(center, dtype=np.float64), math.sqrt(max(r2, 0.0))


def meb_diameters(coords, simplices):
    """Diameter (2 x radius) of the minimal enclosing ball for every row of
    vertex indices in ``simplices``."""
    coords = np.asarray(coords, dtype=np.float64)
    simplices = np.asarray(simplices, dtype=np.int64)
    out = np.empty(len(simplices), dtype=np.float64)
    table = coords.tolist()
    dim = coords.shape[1]
    for row, verts in enumerate(simplices.tolist()):
        pts = [table[v] for v in verts]
        _, r2 = _welzl(pts, len(pts), [], dim)
        out[row] = 2.0 * math.sqrt(max(r2, 0.0))
    return out


def reduce_boundary(indptr, indices):
    """Standard left-to-right Z/2 column reduction.

    Column j of the boundary matrix holds rows ``indices[indptr[j]:indptr[j+1]]``.
    Returns ``low`` with low[j] = pivot row of reduced column j, or -1 if zero.
    """
    indptr = np.asarray(indptr, dtype=np.int64).tolist()
    indices = np.asarray(indices, dtype=np.int64).tolist()
    m = len(indptr) - 1
    low = [-1] * m
    owner = {}
    reduced = [None] * m
    for j in range(m):
        col = set(indices[indptr[j]:indptr[j + 1]])
        while col:
            pivot = max(col)
            other = owner.get(pivot)
            if other is None:
                owner[pivot] = j
                low[j] = pivot
                reduced[j] = col
                break
            col ^= reduced[other]
    return np.array(low, dtype=np.int64)
