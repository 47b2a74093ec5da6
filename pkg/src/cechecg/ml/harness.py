"""Stratified k-fold evaluation of the classifiers on homological features."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ParameterError, StratificationError, ValidationError
from .features import feature_matrix
from .linear import LogisticRegression
from .metrics import accuracy, cohen_kappa, confusion_matrix, f1_score, roc_auc
from .mlp import MLPClassifier
from .trees import DecisionTreeClassifier, RandomForestClassifier

# (classes kept, positive class for binary metrics)
TASKS = {
    "NSRvsMCI": (("NSR", "MCI"), "MCI"),
    "MCIvsNonMCI": (("MCI", "NONMCI"), "MCI"),
    "ThreeClass": (("NSR", "MCI", "NONMCI"), None),
}

DEFAULT_PARAMS = {
    "random_forest": {"n_estimators": 275, "max_depth": 21, "min_samples_split": 4,
                      "min_samples_leaf": 3, "max_features": "sqrt"},
    "decision_tree": {"max_depth": 15, "min_samples_split": 3, "min_samples_leaf": 2},
    "logistic_regression": {"C": 5.0, "max_iter": 180},
    "mlp": {"hidden": (256, 64, 32), "lr": 1e-3, "dropout": 0.25, "epochs": 200,
            "batch_size": 32},
}

_FACTORIES = {
    "random_forest": RandomForestClassifier,
    "decision_tree": DecisionTreeClassifier,
    "logistic_regression": LogisticRegression,
    "mlp": MLPClassifier,
}
_SEEDED = {"random_forest", "decision_tree", "mlp"}


def fit_random_forest(x, y, seed=0, **params):
    return RandomForestClassifier(**{**DEFAULT_PARAMS["random_forest"], **params}, seed=seed).fit(x, y)


def fit_decision_tree(x, y, seed=0, **params):
    return DecisionTreeClassifier(**{**DEFAULT_PARAMS["decision_tree"], **params}, seed=seed).fit(x, y)


def fit_logistic_regression(x, y, **params):
    return LogisticRegression(**{**DEFAULT_PARAMS["logistic_regression"], **params}).fit(x, y)


def fit_mlp(x, y, seed=0, **params):
    return MLPClassifier(**{**DEFAULT_PARAMS["mlp"], **params}, seed=seed).fit(x, y)


def make_model(spec, seed):
    """Instantiate from a name, a ``{"name": ..., **params}`` dict, or a callable
    ``factory(seed) -> estimator``."""
    if callable(spec):
        return spec(seed), getattr(spec, "__name__", "custom"), {}
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name")
    if name not in _FACTORIES:
        raise ParameterError(f"unknown model {name!r}; choose from {sorted(_FACTORIES)}")
    params = {**DEFAULT_PARAMS[name], **spec}
    if name in _SEEDED:
        return _FACTORIES[name](**params, seed=seed), name, params
    return _FACTORIES[name](**params), name, params


def stratified_folds(labels, folds, seed):
    """Fold index per sample: each class is shuffled then dealt round-robin."""
    labels = np.asarray(labels)
    if folds < 2:
        raise ParameterError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(len(labels), dtype=np.int64)
    for cls in np.unique(labels):
        members = np.nonzero(labels == cls)[0]
        if len(members) < folds:
            raise StratificationError(
                f"class {cls!r} has {len(members)} samples, fewer than {folds} folds")
        members = members[rng.permutation(len(members))]
        assign[members] = np.arange(len(members)) % folds
    return assign


@dataclass
class ModelResult:
    name: str
    params: dict
    accuracy_mean: float
    accuracy_sd: float
    auc: float
    f1: float
    kappa: float
    fold_accuracies: list
    confusion: list


@dataclass
class EvalReport:
    task: str
    classes: list
    positive_class: str | None
    folds: int
    seed: int
    evaluate_on: str
    subjects: list
    fold_assignments: list
    models: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    def summary_rows(self):
        rows = []
        for m in self.models.values():
            rows.append({
                "classifier": m.name,
                "task": self.task,
                "acc_sd": f"{100 * m.accuracy_mean:.1f}±{100 * m.accuracy_sd:.2f}",
                "auc": f"{m.auc:.2f}",
                "f1": f"{m.f1:.2f}",
                "kappa": f"{m.kappa:.2f}",
            })
        return rows

    def summary_csv(self):
        lines = ["Classifier,Task,Acc±SD,AUC,f1 score,Kappa"]
        for r in self.summary_rows():
            lines.append(f"{r['classifier']},{r['task']},{r['acc_sd']},{r['auc']},{r['f1']},{r['kappa']}")
        return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.ndarray, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj)}")


def _select(features, task):
    labels = [f.label for f in features]
    if task in TASKS:
        keep, positive = TASKS[task]
        chosen = [f for f in features if f.label in keep]
        classes = [c for c in keep if any(f.label == c for f in chosen)]
    elif task in (None, "auto"):
        chosen = list(features)
        classes = sorted(set(labels))
        positive = classes[-1] if len(classes) == 2 else None
    else:
        raise ParameterError(f"unknown task {task!r}; choose from {sorted(TASKS)} or 'auto'")
    if len(classes) < 2:
        raise ValidationError(f"task {task} needs two classes present, have {classes}")
    return chosen, list(classes), positive


def _run_fold(spec, x, y, train, test, seed):
    model, name, params = make_model(spec, seed)
    model.fit(x[train], y[train])
    proba = np.asarray(model.predict_proba(x[test]))
    return name, params, model.classes_, proba


def train_eval(features, task="NSRvsMCI", model_spec="random_forest", folds=5, seed=0,
               evaluate_on="test", jobs=1):
    """Stratified k-fold evaluation (each fold holds out ~1/k of the subjects).

    Accuracy is averaged over folds (SD uses ddof=1); AUC, F1 and kappa are
    computed on the pooled out-of-fold predictions. ``evaluate_on="train"``
    scores each fold's model on its own training data (a harness sanity mode).
    """
    chosen, classes, positive = _select(features, task)
    x, y = feature_matrix(chosen)
    if not np.all(np.isfinite(x)):
        raise ValidationError("feature matrix has non-finite values")
    assign = stratified_folds(y, folds, seed)
    specs = model_spec if isinstance(model_spec, (list, tuple)) else [model_spec]
    cls_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([cls_index[v] for v in y])
    pos_idx = cls_index[positive] if positive is not None else None
    report = EvalReport(
        task=task or "auto", classes=classes, positive_class=positive, folds=folds, seed=seed,
        evaluate_on=evaluate_on, subjects=[f.subject_id for f in chosen],
        fold_assignments=assign.tolist(),
    )
    for spec_i, spec in enumerate(specs):
        jobs_list = []
        for k in range(folds):
            test = np.nonzero(assign != k)[0] if evaluate_on == "train" else np.nonzero(assign == k)[0]
            train = np.nonzero(assign != k)[0]
            fold_seed = int(np.random.SeedSequence([seed, spec_i, k]).generate_state(1)[0])
            jobs_list.append((train, test, fold_seed))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(lambda a: _run_fold(spec, x, y, *a), jobs_list))
        else:
            results = [_run_fold(spec, x, y, *a) for a in jobs_list]
        pooled_true, pooled_pred, pooled_proba, accs = [], [], [], []
        for (train, test, _), (name, params, model_classes, proba) in zip(jobs_list, results):
            full = np.zeros((len(test), len(classes)))
            for j, c in enumerate(model_classes):
                full[:, cls_index[c]] = proba[:, j]
            pred = np.argmax(full, axis=1)
            accs.append(accuracy(y_idx[test], pred))
            pooled_true.append(y_idx[test])
            pooled_pred.append(pred)
            pooled_proba.append(full)
        yt, yp = np.concatenate(pooled_true), np.concatenate(pooled_pred)
        pr = np.vstack(pooled_proba)
        cm = confusion_matrix(yt, yp, len(classes))
        label = name if name not in report.models else f"{name}_{spec_i}"
        report.models[label] = ModelResult(
            name=name, params=params,
            accuracy_mean=float(np.mean(accs)),
            accuracy_sd=float(np.std(accs, ddof=1)),
            auc=roc_auc(yt, pr, positive=pos_idx),
            f1=f1_score(yt, yp, len(classes), positive=pos_idx),
            kappa=float(cohen_kappa(cm=cm)),
            fold_accuracies=[float(a) for a in accs],
            confusion=cm.tolist(),
        )
    return report
