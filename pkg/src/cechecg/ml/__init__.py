from .features import (FeatureVector, SubjectDiagram, assemble_features, feature_matrix,
                       feature_names, load_feature_table, save_feature_table)
from .harness import (DEFAULT_PARAMS, TASKS, EvalReport, fit_decision_tree, fit_logistic_regression,
                      fit_mlp, fit_random_forest, stratified_folds, train_eval)
from .linear import LogisticRegression, Standardizer
from .metrics import accuracy, binary_auc, cohen_kappa, confusion_matrix, f1_score, roc_auc
from .mlp import MLPClassifier
from .stats import paired_t_test
from .trees import DecisionTreeClassifier, RandomForestClassifier, gini_gain, gini_impurity

__all__ = [
    "FeatureVector", "SubjectDiagram", "assemble_features", "feature_matrix", "feature_names",
    "load_feature_table", "save_feature_table", "DEFAULT_PARAMS", "TASKS", "EvalReport",
    "fit_decision_tree", "fit_logistic_regression", "fit_mlp", "fit_random_forest",
    "stratified_folds", "train_eval", "LogisticRegression", "Standardizer", "accuracy",
    "binary_auc", "cohen_kappa", "confusion_matrix", "f1_score", "roc_auc", "MLPClassifier",
    "paired_t_test", "DecisionTreeClassifier", "RandomForestClassifier", "gini_gain",
    "gini_impurity",
]
