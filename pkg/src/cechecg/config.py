"""Flat ``key=value`` pipeline configuration."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ParameterError, ParseError


@dataclass
class PipelineConfig:
    # ingest
    win1_ms: float = 200.0
    win2_ms: float = 600.0
    median_boundary: str = "nearest"
    wavelet: str = "db4"
    dwt_level: int = 4
    trial_s: float = 4.0
    rhythm_map: str = ""
    # embedding
    embed_dim: int = 3
    center_rows: bool = True
    # complex
    filtration: str = "cech"
    max_dim: int = 3
    epsilon_max: float | None = None
    verify_tol: float = 1e-9
    # persistence / features
    min_persistence: float = 0.0
    grid_size: int = 16
    # ml
    task: str = "NSRvsMCI"
    models: str = "random_forest,decision_tree,logistic_regression,mlp"
    folds: int = 5
    unit: str = "subject"
    rf_trees: int = 275
    rf_max_depth: int = 21
    rf_min_split: int = 4
    rf_min_leaf: int = 3
    dt_max_depth: int = 15
    dt_min_split: int = 3
    dt_min_leaf: int = 2
    lr_C: float = 5.0
    lr_max_iter: int = 180
    mlp_layers: str = "256,64,32"
    mlp_lr: float = 0.001
    mlp_dropout: float = 0.25
    mlp_epochs: int = 200
    mlp_batch_size: int = 32
    # run
    seed: int = 0
    jobs: int = 1
    out: str = "run"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.filtration not in ("cech", "rips"):
            raise ParameterError(f"filtration must be cech or rips, got {self.filtration!r}")
        if self.median_boundary not in ("nearest", "reflect"):
            raise ParameterError("median_boundary must be nearest or reflect")
        if not 0 < self.win1_ms < self.win2_ms:
            raise ParameterError("need 0 < win1_ms < win2_ms")
        if self.trial_s <= 0:
            raise ParameterError("trial_s must be positive")
        if self.embed_dim < 1 or self.max_dim < 0 or self.grid_size < 2:
            raise ParameterError("embed_dim >= 1, max_dim >= 0 and grid_size >= 2 required")
        if self.epsilon_max is not None and self.epsilon_max <= 0:
            raise ParameterError("epsilon_max must be positive")
        if self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if self.unit not in ("subject", "record"):
            raise ParameterError("unit must be 'subject' or 'record'")
        if self.min_persistence < 0:
            raise ParameterError("min_persistence must be >= 0")
        for name in self.model_list():
            if name not in ("random_forest", "decision_tree", "logistic_regression", "mlp"):
                raise ParameterError(f"unknown model {name!r}")

    def model_list(self):
        return [m.strip() for m in self.models.split(",") if m.strip()]

    def model_specs(self):
        table = {
            "random_forest": {"n_estimators": self.rf_trees, "max_depth": self.rf_max_depth,
                              "min_samples_split": self.rf_min_split,
                              "min_samples_leaf": self.rf_min_leaf},
            "decision_tree": {"max_depth": self.dt_max_depth, "min_samples_split": self.dt_min_split,
                              "min_samples_leaf": self.dt_min_leaf},
            "logistic_regression": {"C": self.lr_C, "max_iter": self.lr_max_iter},
            "mlp": {"hidden": tuple(int(v) for v in self.mlp_layers.split(",")),
                    "lr": self.mlp_lr, "dropout": self.mlp_dropout, "epochs": self.mlp_epochs,
                    "batch_size": self.mlp_batch_size},
        }
        return [{"name": m, **table[m]} for m in self.model_list()]

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def dumps(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(lines) + "\n"


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name, raw, default):
    ftype = {f.name: f.type for f in fields(PipelineConfig)}[name]
    text = raw.strip()
    if "None" in str(ftype) and text.lower() in ("", "none", "auto"):
        return None
    if isinstance(default, bool) or "bool" in str(ftype):
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if "int" in str(ftype):
        return int(text)
    if "float" in str(ftype):
        return float(text)
    return text


def parse_config(text, path=None, base=None):
    """Parse ``key=value`` lines; ``#`` starts a comment. Unknown keys are rejected."""
    base = base or PipelineConfig()
    known = {f.name for f in fields(PipelineConfig)}
    changes = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ParseError(f"expected key=value, got {line!r}", path, lineno)
        if key not in known:
            raise ParseError(f"unknown config key {key!r}", path, lineno)
        try:
            changes[key] = _coerce(key, value, getattr(base, key))
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", path, lineno) from None
    return base.replace(**changes)


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ParseError("config file not found", path)
    return parse_config(path.read_text(encoding="utf-8"), path)
