"""Persistence diagrams by Z/2 boundary-matrix reduction, Betti curves and
persistent entropy."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ParameterError, ParseError, UndefinedEntropyError


@dataclass
class PersistenceDiagram:
    """Birth/death pairs per homology dimension; deaths may be ``inf``.

    Dimensions run 0..max_dim of the source filtration. Classes in the top
    dimension are artifacts of truncating the complex there.
    """

    pairs: dict
    epsilon_max: float = np.inf
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pairs = {int(k): np.asarray(v, dtype=np.float64).reshape(-1, 2)
                      for k, v in self.pairs.items()}

    def __getitem__(self, k):
        return self.pairs.get(k, np.empty((0, 2)))

    @property
    def dims(self):
        return sorted(self.pairs)

    def lifetimes(self, k, cap=None):
        bars = self[k]
        death = bars[:, 1] if cap is None else np.minimum(bars[:, 1], cap)
        return death - bars[:, 0]

    def count(self, k=None):
        if k is None:
            return sum(len(v) for v in self.pairs.values())
        return len(self[k])

    def to_rows(self):
        rows = []
        for k in self.dims:
            for b, d in self.pairs[k]:
                rows.append((k, float(b), float(d)))
        return rows


def compute_persistence(filtration):
    """Pair simplices by standard column reduction over Z/2.

    Zero-length pairs are kept; unpaired creators give infinite classes.
    """
    filtration.validate()
    indptr, indices = filtration.boundary()
    low = _kernels.reduce_boundary(indptr, indices)
    dims, values = filtration.dims, filtration.values
    m = len(values)
    paired = np.zeros(m, dtype=bool)
    deaths = np.nonzero(low >= 0)[0]
    births = low[deaths]
    paired[deaths] = True
    paired[births] = True
    essential = np.nonzero(~paired)[0]
    pairs = {k: [] for k in range(filtration.max_dim + 1)}
    # finite pairs: creator dimension, (creator value, destroyer value)
    for k in range(filtration.max_dim + 1):
        sel = dims[births] == k
        fin = np.column_stack([values[births[sel]], values[deaths[sel]]])
        ess = essential[dims[essential] == k]
        inf = np.column_stack([values[ess], np.full(len(ess), np.inf)])
        bars = np.vstack([fin, inf]) if len(fin) or len(inf) else np.empty((0, 2))
        order = np.lexsort((bars[:, 1], bars[:, 0])) if len(bars) else []
        pairs[k] = bars[order]
    prov = {"kind": filtration.kind, "max_dim": filtration.max_dim,
            "points": filtration.point_count}
    return PersistenceDiagram(pairs, filtration.epsilon_max, prov)


@dataclass
class BettiCurve:
    dimension: int
    grid: np.ndarray
    values: np.ndarray


def betti_curve(diagram, k, grid):
    """Number of dimension-k bars alive at each grid scale: b <= eps < d."""
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(~np.isfinite(grid)):
        raise ParameterError("grid must be finite")
    if np.any(grid < 0):
        raise ParameterError("grid contains negative scales")
    if np.any(np.diff(grid) < 0):
        raise ParameterError("grid must be sorted ascending")
    bars = diagram[k]
    alive = (bars[:, 0][None, :] <= grid[:, None]) & (grid[:, None] < bars[:, 1][None, :])
    return BettiCurve(k, grid, alive.sum(axis=1).astype(np.int64))


def entropy_of_lifetimes(lifetimes):
    """Shannon entropy (nats) of normalized positive lifetimes."""
    life = np.asarray(lifetimes, dtype=np.float64)
    life = life[life > 0]
    if life.size == 0:
        raise UndefinedEntropyError("no bars with positive lifetime")
    if life.size == 1:
        return 0.0
    p = life / life.sum()
    return float(-np.sum(p * np.log(p)))


def persistent_entropy(diagram, k, epsilon_cap=None):
    """Entropy of dimension-k lifetimes, infinite deaths capped at ``epsilon_cap``
    (default: the filtration's epsilon_max). Non-negative by convention."""
    cap = diagram.epsilon_max if epsilon_cap is None else epsilon_cap
    try:
        return entropy_of_lifetimes(diagram.lifetimes(k, cap))
    except UndefinedEntropyError:
        raise UndefinedEntropyError(f"H{k} has no bar with positive lifetime") from None


def prune_transient(diagram, min_persistence):
    """Drop finite bars living shorter than ``min_persistence``."""
    if min_persistence < 0:
        raise ParameterError("min_persistence must be >= 0")
    kept = {}
    for k, bars in diagram.pairs.items():
        life = bars[:, 1] - bars[:, 0]
        kept[k] = bars[np.isinf(bars[:, 1]) | (life >= min_persistence)]
    prov = dict(diagram.provenance)
    prov["min_persistence"] = max(float(min_persistence), prov.get("min_persistence", 0.0))
    return PersistenceDiagram(kept, diagram.epsilon_max, prov)


@dataclass
class EntropySummary:
    mean: dict  # group -> {k: mean}
    variance: dict  # group -> {k: population variance}
    entropies: dict  # group -> {k: list of per-diagram entropies}


def entropy_statistics(diagrams, dims=(0, 1, 2), epsilon_cap=None):
    """Mean and population variance of persistent entropy per group and dimension.

    ``diagrams`` maps a group (e.g. class label) to a list of diagrams; a bare
    list is treated as one group named ``"all"``.
    """
    if not isinstance(diagrams, dict):
        diagrams = {"all": list(diagrams)}
    if not diagrams or not any(diagrams.values()):
        raise ParameterError("no diagrams given")
    entropies = defaultdict(dict)
    mean, var = defaultdict(dict), defaultdict(dict)
    for group, dgms in diagrams.items():
        for k in dims:
            vals = np.array([persistent_entropy(d, k, epsilon_cap) for d in dgms])
            entropies[group][k] = vals.tolist()
            mean[group][k] = float(vals.mean())
            var[group][k] = float(vals.var())
    return EntropySummary(dict(mean), dict(var), dict(entropies))


def save_diagram(diagram, path):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dim,birth,death\n")
        for k, b, d in diagram.to_rows():
            fh.write(f"{k},{b!r},{'inf' if np.isinf(d) else repr(d)}\n")


def load_diagram(path, epsilon_max=np.inf):
    path = Path(path)
    pairs = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "dim,birth,death":
            raise ParseError("expected header 'dim,birth,death'", path, 1)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                k, b, d = line.strip().split(",")
                pairs[int(k)].append((float(b), float(d)))
            except ValueError:
                raise ParseError(f"cannot parse {line.strip()!r}", path, lineno) from None
    return PersistenceDiagram(dict(pairs), epsilon_max)


def save_betti_curves(curves, path):
    """CSV ``epsilon,beta0,beta1,...`` from curves sharing one grid."""
    path = Path(path)
    grid = curves[0].grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epsilon," + ",".join(f"beta{c.dimension}" for c in curves) + "\n")
        for i, eps in enumerate(grid):
            fh.write(f"{float(eps)!r}," + ",".join(str(int(c.values[i])) for c in curves) + "\n")
