"""Classification metrics: accuracy, confusion matrix, F1, Cohen's kappa, ROC AUC."""
import numpy as np
from scipy.stats import rankdata

from ..errors import ValidationError


def confusion_matrix(y_true, y_pred, n_classes=None):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if n_classes is None:
        n_classes = int(max(y_true.max(initial=-1), y_pred.max(initial=-1))) + 1
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def accuracy(y_true, y_pred):
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def f1_score(y_true, y_pred, n_classes=None, positive=None):
    """Binary F1 for ``positive`` if given, else macro average over classes."""
    cm = confusion_matrix(y_true, y_pred, n_classes)

    def _f1(c):
        tp = cm[c, c]
        denom = 2 * tp + (cm[:, c].sum() - tp) + (cm[c, :].sum() - tp)
        return 0.0 if denom == 0 else 2.0 * tp / denom

    if positive is not None:
        return float(_f1(positive))
    return float(np.mean([_f1(c) for c in range(cm.shape[0])]))


def cohen_kappa(y_true=None, y_pred=None, cm=None):
    """Kappa from a confusion matrix, in exact integer arithmetic up to the
    final division. Zero when expected agreement is total (no information)."""
    if cm is None:
        cm = confusion_matrix(y_true, y_pred)
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    chance = int(np.dot(cm.sum(axis=1), cm.sum(axis=0)))
    observed = int(np.trace(cm))
    denom = total * total - chance
    if denom == 0:
        return 0.0
    return (total * observed - chance) / denom


def binary_auc(y_true, scores):
    """Area under the ROC curve via the Mann-Whitney rank statistic (ties get midranks)."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both classes present")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_auc(y_true, proba, positive=None):
    """Binary AUC on the ``positive`` column, or macro one-vs-rest when None."""
    y_true = np.asarray(y_true, dtype=np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    if positive is not None:
        return binary_auc(y_true == positive, proba[:, positive])
    return float(np.mean([binary_auc(y_true == c, proba[:, c]) for c in range(proba.shape[1])]))
