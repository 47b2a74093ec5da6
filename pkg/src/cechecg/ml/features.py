"""Fixed-length homological feature vectors per subject."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConsistencyError, ParseError, ValidationError
from ..persistence import betti_curve, entropy_of_lifetimes

SUMMARY_NAMES = ("entropy", "entropy_present", "bar_count", "total_persistence",
                 "max_lifetime", "mean_lifetime")


@dataclass
class SubjectDiagram:
    subject_id: str
    label: str
    diagram: object


@dataclass
class FeatureVector:
    subject_id: str
    label: str
    values: np.ndarray


def feature_names(dims=(0, 1, 2), grid_size=16):
    names = [f"h{k}_{s}" for k in dims for s in SUMMARY_NAMES]
    names += [f"h{k}_betti_{i:02d}" for k in dims for i in range(grid_size)]
    return names


def _summary(lifetimes):
    life = lifetimes[lifetimes > 0]
    if life.size == 0:
        return [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    return [entropy_of_lifetimes(life), 1.0, float(life.size), float(life.sum()),
            float(life.max()), float(life.mean())]


def assemble_features(subjects, dims=(0, 1, 2), grid_size=16, epsilon_max=None):
    """Per dimension: entropy, its presence flag, bar count, total, max and mean
    lifetime over positive-lifetime bars (infinite deaths capped at the
    diagram's epsilon_max); then Betti curves sampled on ``grid_size`` evenly
    spaced scales over [0, epsilon_max]. ``epsilon_max`` defaults to the
    largest across subjects."""
    subjects = list(subjects)
    if not subjects:
        raise ValidationError("no subjects to featurize")
    pipeline = [s.diagram.provenance.get("pipeline", {}) for s in subjects]
    for s, prov in zip(subjects, pipeline):
        if prov != pipeline[0]:
            raise ConsistencyError(f"subject {s.subject_id} was processed with different "
                                   f"parameters: {prov} vs {pipeline[0]}")
    if epsilon_max is None:
        epsilon_max = max(float(s.diagram.epsilon_max) for s in subjects)
    grid = np.linspace(0.0, epsilon_max, grid_size)
    out = []
    for s in subjects:
        d = s.diagram
        values = []
        for k in dims:
            values += _summary(d.lifetimes(k, cap=d.epsilon_max))
        for k in dims:
            values += betti_curve(d, k, grid).values.astype(np.float64).tolist()
        out.append(FeatureVector(s.subject_id, str(s.label), np.array(values)))
    return out


def feature_matrix(features):
    x = np.vstack([f.values for f in features])
    y = np.array([f.label for f in features])
    return x, y


def save_feature_table(features, path, names=None):
    """CSV with ``subject_id``, one named column per feature, label last."""
    names = names or feature_names(grid_size=(len(features[0].values) // 3) - len(SUMMARY_NAMES))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["subject_id", *names, "label"]) + "\n")
        for f in features:
            fh.write(",".join([f.subject_id, *(repr(float(v)) for v in f.values), f.label]) + "\n")


def load_feature_table(path):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if len(header) < 3 or header[0] != "subject_id" or header[-1] != "label":
            raise ParseError("feature table needs subject_id first and label last", path, 1)
        out = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise ParseError(f"{len(parts)} columns, header has {len(header)}", path, lineno)
            try:
                vals = np.array([float(v) for v in parts[1:-1]])
            except ValueError:
                raise ParseError("non-numeric feature", path, lineno) from None
            out.append(FeatureVector(parts[0], parts[-1], vals))
    return out, header[1:-1]
