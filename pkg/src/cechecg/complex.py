"""Vietoris-Rips and Cech filtrations of point clouds, plus the nerve check.

Scale convention: balls have *diameter* epsilon, so an edge enters at the
pairwise distance and a Cech simplex enters at the diameter of the minimal
enclosing ball of its vertices.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist

from . import _kernels
from ._kernels import _pykernels
from .errors import ParameterError, ParseError, StructureError

# rows processed per block during clique expansion (bounds the mask memory)
_EXPAND_BLOCK_CELLS = 4_000_000


class Simplex(NamedTuple):
    vertices: tuple
    filtration_value: float

    @property
    def dimension(self):
        return len(self.vertices) - 1


@dataclass
class Ball:
    center: np.ndarray
    radius: float

    @property
    def diameter(self):
        return 2.0 * self.radius


def distance(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ParameterError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((p - q) ** 2)))


def min_enclosing_ball(points):
    """Smallest ball containing ``points`` (rows), via Welzl's recursion."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0 or pts.shape[0] == 0:
        raise ParameterError("minimal enclosing ball of an empty set")
    if not np.all(np.isfinite(pts)):
        raise ParameterError("non-finite coordinates")
    if pts.shape[0] <= 16 and pts.shape[1] <= 16:
        center, radius = _kernels.min_enclosing_ball(pts)
        return Ball(center, float(radius))
    return _large_meb(pts)


def _large_meb(pts):
    # only hull vertices can support the ball
    cand = pts
    if pts.shape[1] >= 2 and pts.shape[0] > pts.shape[1] + 1:
        try:
            cand = pts[ConvexHull(pts).vertices]
        except Exception:  # flat or degenerate clouds: qhull refuses, use every point
            cand = pts
    cand = cand[np.random.default_rng(0).permutation(len(cand))]
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * len(cand) + 100))
    try:
        center, radius = _pykernels.min_enclosing_ball(cand)
    finally:
        sys.setrecursionlimit(limit)
    return Ball(center, float(radius))


def _row_keys(rows, base):
    """Integer key per row, monotone in lexicographic order of the rows."""
    rows = np.asarray(rows, dtype=np.int64)
    k = rows.shape[1]
    if k and float(base) ** k >= 2.0 ** 62:
        raise ParameterError("too many points for integer simplex keys")
    keys = np.zeros(len(rows), dtype=np.int64)
    for j in range(k):
        keys = keys * base + rows[:, j]
    return keys


@dataclass
class Filtration:
    """Simplices in filtration order: (value, dimension, lexicographic vertices).

    ``vertex_table`` rows are padded with -1 beyond each simplex's dimension.
    """

    vertex_table: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    kind: str
    point_count: int
    max_dim: int
    epsilon_max: float
    _boundary: tuple = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.simplices)

    @property
    def simplices(self):
        out = []
        for row, dim, val in zip(self.vertex_table.tolist(), self.dims.tolist(), self.values.tolist()):
            out.append(Simplex(tuple(row[: dim + 1]), val))
        return out

    def of_dim(self, k):
        mask = self.dims == k
        return self.vertex_table[mask, : k + 1], self.values[mask]

    def truncate(self, epsilon):
        """Sub-filtration of simplices with value <= epsilon (the complex at that scale)."""
        mask = self.values <= epsilon
        return Filtration(self.vertex_table[mask], self.dims[mask], self.values[mask],
                          self.kind, self.point_count, self.max_dim,
                          min(float(epsilon), self.epsilon_max))

    def boundary(self):
        """Z/2 boundary matrix in compressed-column form (indptr, indices).

        Row and column indices are filtration positions. Raises StructureError
        if a face is missing, enters later than its coface, or the order is not
        a valid filtration order.
        """
        if self._boundary is not None:
            return self._boundary
        m = len(self)
        if m and (self.vertex_table[:, 0].min() < 0 or self.vertex_table.max() >= self.point_count):
            bad = int(np.argmax((self.vertex_table[:, 0] < 0) | (self.vertex_table.max(axis=1) >= self.point_count)))
            raise StructureError(f"simplex {self.simplices[bad].vertices} references a vertex "
                                 f"outside 0..{self.point_count - 1}")
        counts = np.where(self.dims > 0, self.dims + 1, 0)
        indptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        base = max(self.point_count, 1)
        positions = np.arange(m)
        prev_keys = prev_pos = None
        for k in range(0, int(self.dims.max(initial=0)) + 1):
            mask = self.dims == k
            rows = self.vertex_table[mask, : k + 1]
            pos = positions[mask]
            if np.any(np.diff(rows, axis=1) <= 0):
                bad = pos[np.argmax(np.any(np.diff(rows, axis=1) <= 0, axis=1))]
                raise StructureError(f"simplex {self.simplices[bad].vertices} has unsorted or repeated vertices")
            keys = _row_keys(rows, base)
            order = np.argsort(keys, kind="stable")
            skeys, spos = keys[order], pos[order]
            if np.any(np.diff(skeys) == 0):
                dup = spos[1:][np.diff(skeys) == 0][0]
                raise StructureError(f"duplicate simplex {self.simplices[dup].vertices}")
            if k > 0:
                for drop in range(k + 1):
                    facet = np.delete(rows, drop, axis=1)
                    fkeys = _row_keys(facet, base)
                    hit = np.searchsorted(prev_keys, fkeys)
                    hit = np.minimum(hit, len(prev_keys) - 1) if len(prev_keys) else hit
                    found = len(prev_keys) > 0
                    ok = (prev_keys[hit] == fkeys) if found else np.zeros(len(fkeys), bool)
                    if not np.all(ok):
                        bad = pos[np.argmin(ok)]
                        raise StructureError(f"simplex {self.simplices[bad].vertices} is missing a face")
                    fpos = prev_pos[hit]
                    if np.any(fpos >= pos):
                        bad = pos[np.argmax(fpos >= pos)]
                        raise StructureError(
                            f"simplex {self.simplices[bad].vertices} precedes one of its faces")
                    indices[indptr[pos] + (k - drop)] = fpos
            prev_keys, prev_pos = skeys, spos
        # faces ordered by position within each column; reduction kernels sort anyway
        self._boundary = (indptr, indices)
        return self._boundary

    def validate(self):
        """Check face closure, ordering and value monotonicity."""
        indptr, indices = self.boundary()
        if len(self) == 0:
            return
        colmax = np.full(len(self), -np.inf)
        has = np.diff(indptr) > 0
        if np.any(has):
            colmax[has] = np.maximum.reduceat(self.values[indices], indptr[:-1][has])
        bad = self.values < colmax
        if np.any(bad):
            i = int(np.argmax(bad))
            raise StructureError(f"simplex {self.simplices[i].vertices} enters at {self.values[i]} "
                                 f"before its face (value {colmax[i]})")
        order_ok = np.all(np.diff(self.values) >= 0)
        if not order_ok:
            i = int(np.argmax(np.diff(self.values) < 0)) + 1
            raise StructureError(f"simplex {self.simplices[i].vertices} is out of filtration order")


def _clique_expand(simplices, adjacency):
    """All (k+1)-cliques extending each k-clique by a larger vertex, in lexicographic order."""
    n = adjacency.shape[0]
    m, k = simplices.shape
    if m == 0:
        return np.empty((0, k + 1), dtype=np.int64)
    above = np.arange(n)[None, :]
    block = max(1, _EXPAND_BLOCK_CELLS // max(n, 1))
    out = []
    for start in range(0, m, block):
        s = simplices[start:start + block]
        mask = above > s[:, -1:]
        for j in range(k):
            mask &= adjacency[s[:, j]]
        rows, cols = np.nonzero(mask)
        if rows.size:
            out.append(np.hstack([s[rows], cols[:, None]]))
    if not out:
        return np.empty((0, k + 1), dtype=np.int64)
    return np.vstack(out).astype(np.int64)


def _facet_max(rows, prev_rows, prev_values, base):
    """Largest value among the facets of each row (facets must exist)."""
    prev_keys = _row_keys(prev_rows, base)
    out = np.full(len(rows), -np.inf)
    for drop in range(rows.shape[1]):
        fkeys = _row_keys(np.delete(rows, drop, axis=1), base)
        out = np.maximum(out, prev_values[np.searchsorted(prev_keys, fkeys)])
    return out


def _check_inputs(cloud, epsilon_max, max_dim):
    pts = np.atleast_2d(np.asarray(getattr(cloud, "points", cloud), dtype=np.float64))
    if pts.shape[0] < 1:
        raise ParameterError("empty point cloud")
    if not np.all(np.isfinite(pts)):
        raise ParameterError("point cloud has non-finite coordinates")
    if max_dim < 0:
        raise ParameterError(f"max_dim must be >= 0, got {max_dim}")
    if epsilon_max is None:
        epsilon_max = min_enclosing_ball(pts).diameter
        # a cloud of coincident points still needs a positive scale
        epsilon_max = epsilon_max if epsilon_max > 0 else 1.0
    if not epsilon_max > 0:
        raise ParameterError(f"epsilon_max must be positive, got {epsilon_max}")
    return pts, float(epsilon_max)


def _assemble(levels, kind, n, max_dim, epsilon_max):
    width = max_dim + 1
    tables, dims, values = [], [], []
    for k, (rows, vals) in enumerate(levels):
        padded = np.full((len(rows), width), -1, dtype=np.int64)
        padded[:, : k + 1] = rows
        tables.append(padded)
        dims.append(np.full(len(rows), k, dtype=np.int64))
        values.append(vals)
    table = np.vstack(tables)
    dims = np.concatenate(dims)
    values = np.concatenate(values).astype(np.float64)
    keys = [table[:, j] for j in range(width - 1, -1, -1)] + [dims, values]
    order = np.lexsort(keys)
    return Filtration(np.ascontiguousarray(table[order]), dims[order], values[order],
                      kind, n, max_dim, epsilon_max)


def _build(cloud, epsilon_max, max_dim, kind):
    defaulted = epsilon_max is None
    pts, epsilon_max = _check_inputs(cloud, epsilon_max, max_dim)
    n = pts.shape[0]
    dist = cdist(pts, pts)
    if defaulted:
        # roundoff can put the longest edge an ulp past the cloud's MEB diameter
        epsilon_max = max(epsilon_max, float(dist.max()))
    adjacency = dist <= epsilon_max
    np.fill_diagonal(adjacency, False)
    rows = np.arange(n, dtype=np.int64)[:, None]
    levels = [(rows, np.zeros(n))]
    for k in range(1, max_dim + 1):
        rows = _clique_expand(rows, adjacency)
        if len(rows) == 0:
            break
        if k == 1:
            vals = dist[rows[:, 0], rows[:, 1]]
        elif kind == "rips":
            vals = _facet_max(rows, levels[-1][0], levels[-1][1], n)
        else:
            vals = _kernels.meb_diameters(pts, rows)
            # MEB diameter is monotone under inclusion; clamp away roundoff
            vals = np.maximum(vals, _facet_max(rows, levels[-1][0], levels[-1][1], n))
        levels.append((rows, vals))
    if defaulted:
        epsilon_max = max(epsilon_max, max(float(v.max()) for _, v in levels))
    if kind == "cech":
        # faces of survivors survive too, because values are monotone
        levels = [(r[v <= epsilon_max], v[v <= epsilon_max]) for r, v in levels]
        levels = [lv for lv in levels if len(lv[0])]
    return _assemble(levels, kind, n, max_dim, epsilon_max)


def build_rips_filtration(cloud, epsilon_max=None, max_dim=3):
    """Vietoris-Rips filtration: a simplex enters at its longest edge."""
    return _build(cloud, epsilon_max, max_dim, "rips")


def build_cech_filtration(cloud, epsilon_max=None, max_dim=3):
    """Cech filtration: Rips candidates re-valued by minimal-enclosing-ball
    diameter and kept when that diameter is within ``epsilon_max``."""
    return _build(cloud, epsilon_max, max_dim, "cech")


def build_filtration(cloud, kind="cech", epsilon_max=None, max_dim=3):
    if kind == "cech":
        return build_cech_filtration(cloud, epsilon_max, max_dim)
    if kind == "rips":
        return build_rips_filtration(cloud, epsilon_max, max_dim)
    raise ParameterError(f"unknown filtration kind {kind!r}")


@dataclass
class Violation:
    vertices: tuple
    filtration_value: float
    meb_diameter: float


@dataclass
class VerificationReport:
    kind: str
    checked: int
    tol: float
    violations: list

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {
            "kind": self.kind,
            "checked": self.checked,
            "tol": self.tol,
            "ok": self.ok,
            "violations": [
                {"vertices": list(v.vertices), "filtration_value": v.filtration_value,
                 "meb_diameter": v.meb_diameter}
                for v in self.violations
            ],
        }


def verify_homotopy_equivalence(filtration, cloud, tol=1e-9):
    """Check every simplex's vertex balls share a point at its entry scale.

    A simplex entering at epsilon passes when its minimal enclosing ball has
    diameter <= epsilon + tol. For convex balls the nerve theorem makes this
    sufficient for the complex to be homotopy equivalent to the union of balls.
    """
    pts = np.atleast_2d(np.asarray(getattr(cloud, "points", cloud), dtype=np.float64))
    table = filtration.vertex_table
    if len(table) and (table[:, 0].min() < 0 or table.max() >= len(pts)):
        raise StructureError(f"filtration references vertices outside 0..{len(pts) - 1}")
    violations = []
    for k in range(1, int(filtration.dims.max(initial=0)) + 1):
        mask = filtration.dims == k
        if not np.any(mask):
            continue
        rows = table[mask, : k + 1]
        vals = filtration.values[mask]
        diam = _kernels.meb_diameters(pts, rows)
        for i in np.nonzero(diam > vals + tol)[0]:
            violations.append(Violation(tuple(int(v) for v in rows[i]), float(vals[i]), float(diam[i])))
    violations.sort(key=lambda v: (v.filtration_value, len(v.vertices), v.vertices))
    return VerificationReport(filtration.kind, len(filtration), tol, violations)


def save_filtration(filtration, path):
    """One simplex per line, ``v0 v1 ... vk ; epsilon``, faces before cofaces."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# kind={filtration.kind} points={filtration.point_count} "
                 f"max_dim={filtration.max_dim} epsilon_max={float(filtration.epsilon_max)!r}\n")
        for row, dim, val in zip(filtration.vertex_table.tolist(), filtration.dims.tolist(),
                                 filtration.values.tolist()):
            fh.write(" ".join(map(str, row[: dim + 1])) + f" ; {val!r}\n")


def load_filtration(path, point_count=None):
    path = Path(path)
    meta = {}
    simplices = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta.update(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
                continue
            verts, sep, val = line.partition(";")
            if not sep:
                raise ParseError("expected 'v0 ... vk ; epsilon'", path, lineno)
            try:
                simplices.append((tuple(int(v) for v in verts.split()), float(val)))
            except ValueError:
                raise ParseError(f"cannot parse {line!r}", path, lineno) from None
            if not simplices[-1][0]:
                raise ParseError("simplex without vertices", path, lineno)
    return filtration_from_simplices(
        simplices,
        kind=meta.get("kind", "cech"),
        point_count=int(meta["points"]) if "points" in meta else point_count,
        max_dim=int(meta["max_dim"]) if "max_dim" in meta else None,
        epsilon_max=float(meta["epsilon_max"]) if "epsilon_max" in meta else None,
    )


def filtration_from_simplices(simplices, kind="cech", point_count=None, max_dim=None,
                              epsilon_max=None):
    """Filtration from (vertices, value) pairs, kept in the given order."""
    simplices = [(tuple(v), float(e)) for v, e in simplices]
    top = max((len(v) - 1 for v, _ in simplices), default=0)
    max_dim = top if max_dim is None else max_dim
    if top > max_dim:
        raise StructureError(f"simplex of dimension {top} exceeds max_dim={max_dim}")
    table = np.full((len(simplices), max_dim + 1), -1, dtype=np.int64)
    for i, (v, _) in enumerate(simplices):
        table[i, : len(v)] = v
    if point_count is None:
        point_count = int(table.max(initial=-1)) + 1
    values = np.array([e for _, e in simplices], dtype=np.float64)
    dims = np.array([len(v) - 1 for v, _ in simplices], dtype=np.int64)
    eps = float(values.max(initial=0.0)) if epsilon_max is None else epsilon_max
    return Filtration(table, dims, values, kind, point_count, max_dim, eps)


def jung_factor(d):
    """Cech/Rips interleaving constant in R^d for the diameter convention."""
    return math.sqrt(2.0 * d / (d + 1.0))
