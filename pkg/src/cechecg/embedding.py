"""Spectral embedding of a trial matrix into a low-dimensional point cloud."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError, ParameterError, ParseError, ValidationError


@dataclass
class SpectralDecomposition:
    left_vectors: np.ndarray  # U, (n, n)
    singular_values: np.ndarray  # length min(n, t), descending
    rank: int
    provenance: dict = field(default_factory=dict)


@dataclass
class PointCloud:
    points: np.ndarray  # (n, d)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if not np.all(np.isfinite(self.points)):
            raise ValidationError("point cloud has non-finite coordinates")
        if self.n < self.d + 1:
            warnings.warn(f"{self.n} points in R^{self.d}: top-dimensional voids are not observable",
                          RuntimeWarning, stacklevel=2)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @property
    def subject_id(self):
        return self.provenance.get("subject_id", "")


def _fix_signs(u):
    # largest-magnitude entry of each column made non-negative
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, signs


def decompose(trials, center_rows=True):
    """Singular value decomposition of the (optionally row-centred) trial matrix.

    Only U and the singular values are retained; the reconstruction is checked
    before V is discarded.
    """
    x = np.asarray(getattr(trials, "data", trials), dtype=np.float64)
    prov = dict(getattr(trials, "provenance", {}) or {})
    if not np.all(np.isfinite(x)):
        raise ValidationError("trial matrix has non-finite entries")
    if center_rows:
        x = x - x.mean(axis=1, keepdims=True)
    n, t = x.shape
    try:
        u, s, vt = np.linalg.svd(x, full_matrices=n > t)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for a {n}x{t} matrix: {exc}") from None
    k = min(n, t)
    norm = np.linalg.norm(x)
    if norm > 0:
        err = np.linalg.norm(x - (u[:, :k] * s) @ vt[:k]) / norm
        if not err < 1e-8:
            raise NumericError(f"SVD reconstruction error {err:.3g} for a {n}x{t} matrix")
    u, _ = _fix_signs(u)
    tol = s[0] * max(n, t) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int(np.sum(s > tol))
    prov["center_rows"] = bool(center_rows)
    return SpectralDecomposition(u, s, rank, prov)


def project_point_cloud(dec, d=3):
    """Principal-coordinate scores: column j is U[:, j] scaled by singular value j."""
    available = dec.singular_values.size
    if not 1 <= d <= available:
        raise ParameterError(
            f"embedding dimension {d} outside 1..{available} (numerical rank {dec.rank})"
        )
    pts = dec.left_vectors[:, :d] * dec.singular_values[:d]
    prov = dict(dec.provenance)
    prov["d"] = d
    return PointCloud(pts, prov)


def embed(trials, d=3, center_rows=True):
    return project_point_cloud(decompose(trials, center_rows=center_rows), d)


def save_point_cloud(cloud, path):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# subject={cloud.subject_id} d={cloud.d}\n")
        np.savetxt(fh, cloud.points, delimiter=",", fmt="%.17g")


def load_point_cloud(path):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ParseError("missing '# subject=<id> d=<d>' header", path, 1)
        meta = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
        try:
            d = int(meta["d"])
        except (KeyError, ValueError):
            raise ParseError("header lacks a valid d=<int>", path, 1) from None
        pts = np.loadtxt(fh, delimiter=",", ndmin=2)
    if pts.shape[1] != d:
        raise ParseError(f"rows have {pts.shape[1]} columns, header says d={d}", path, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return PointCloud(pts, {"subject_id": meta.get("subject", path.stem), "d": d})
