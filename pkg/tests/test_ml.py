import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from sklearn import metrics as skm

from cechecg.errors import (
    ConsistencyError, DegenerateTestError, DivergenceError, StratificationError, TrainingError,
)
from cechecg.ml import mlp as mlp_mod
from cechecg.ml.features import (
    FeatureVector, SubjectDiagram, assemble_features, feature_names, load_feature_table,
    save_feature_table,
)
from cechecg.ml.harness import stratified_folds, train_eval
from cechecg.ml.linear import LogisticRegression, Standardizer, logistic_loss_and_grad
from cechecg.ml.metrics import (
    accuracy, binary_auc, cohen_kappa, confusion_matrix, f1_score, roc_auc,
)
from cechecg.ml.mlp import MLPClassifier, init_params, loss_and_grad
from cechecg.ml.stats import paired_t_test
from cechecg.ml.trees import DecisionTreeClassifier, RandomForestClassifier, gini_gain
from cechecg.persistence import PersistenceDiagram
from oracles import central_diff_grad


def xor_data(n, seed, noise=0.1):
    r = np.random.default_rng(seed)
    corners = r.integers(0, 2, size=(n, 2))
    x = corners + r.normal(0, noise, size=(n, 2))
    return x, corners[:, 0] ^ corners[:, 1]


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


# --- metrics -------------------------------------------------------------

def test_metrics_against_sklearn(rng):
    for _ in range(20):
        k = rng.integers(2, 4)
        yt = rng.integers(0, k, 300)
        yp = np.where(rng.random(300) < 0.6, yt, rng.integers(0, k, 300))
        proba = rng.dirichlet(np.ones(k), 300)
        np.testing.assert_array_equal(confusion_matrix(yt, yp, k), skm.confusion_matrix(yt, yp))
        assert accuracy(yt, yp) == skm.accuracy_score(yt, yp)
        assert f1_score(yt, yp, k) == pytest.approx(skm.f1_score(yt, yp, average="macro"), abs=1e-12)
        assert f1_score(yt, yp, k, positive=1) == pytest.approx(
            skm.f1_score(yt, yp, labels=[1], average="macro"), abs=1e-12)
        assert cohen_kappa(yt, yp) == pytest.approx(skm.cohen_kappa_score(yt, yp), abs=1e-12)
        if k == 2:
            assert roc_auc(yt, proba, positive=1) == pytest.approx(
                skm.roc_auc_score(yt, proba[:, 1]), abs=1e-12)
        else:
            assert roc_auc(yt, proba) == pytest.approx(
                skm.roc_auc_score(yt, proba, multi_class="ovr", average="macro"), abs=1e-12)


def test_perfect_predictions():
    y = np.array([0, 1, 2, 1, 0, 2, 2])
    proba = np.eye(3)[y]
    assert accuracy(y, y) == 1 and f1_score(y, y, 3) == 1
    assert cohen_kappa(y, y) == 1 and roc_auc(y, proba) == 1


@given(labels=st.lists(st.integers(0, 3), min_size=1, max_size=60), const=st.integers(0, 3))
def test_constant_predictor_kappa_zero(labels, const):
    assert cohen_kappa(labels, [const] * len(labels)) == 0


def test_random_predictor_kappa_near_zero(rng):
    y = np.repeat([0, 1], 5000)
    assert abs(cohen_kappa(y, rng.integers(0, 2, 10_000))) < 0.05


def test_auc_monotone_invariance(rng):
    for _ in range(1000):
        n = rng.integers(4, 40)
        y = rng.permutation(np.arange(n) % 2)
        s = rng.normal(size=n)
        base = binary_auc(y, s)
        for g in (np.exp, lambda v: v**3, lambda v: 3 * v - 7):
            assert binary_auc(y, g(s)) == base


# --- trees ---------------------------------------------------------------

def test_gini_gain_hand_computed():
    y = [0, 0, 0, 1, 1, 1]
    assert gini_gain(y, [1, 1, 0, 1, 0, 0]) == pytest.approx(0.5 - 4 / 9, abs=1e-15)
    assert gini_gain(y, [1, 1, 1, 1, 0, 0]) == pytest.approx(0.25, abs=1e-15)
    assert gini_gain(y, [1, 1, 1, 0, 0, 0]) == pytest.approx(0.5, abs=1e-15)


def test_pure_node_is_leaf():
    t = DecisionTreeClassifier(min_samples_leaf=1).fit([[0], [1], [2], [3]], [0, 0, 1, 1])
    assert t.node_count == 3
    assert all(np.max(v) == 1 for v in t.value[t.feature < 0])


def test_stump_picks_predictive_feature(rng):
    noise = rng.integers(0, 2, size=(40, 3))
    signal = np.repeat([0, 1], 20)
    x = np.column_stack([noise[:, 0], signal, noise[:, 1:]])
    t = DecisionTreeClassifier(max_depth=1).fit(x, signal)
    assert t.feature[0] == 1
    assert np.all(t.predict(x) == signal)


def test_single_class_rejected():
    with pytest.raises(TrainingError):
        DecisionTreeClassifier().fit([[0], [1]], [1, 1])
    with pytest.raises(TrainingError):
        RandomForestClassifier(n_estimators=3).fit([[0], [1]], [1, 1])


def test_xor():
    x, y = xor_data(200, 0)
    xt, yt = xor_data(200, 1)
    assert accuracy(yt, DecisionTreeClassifier(seed=0).fit(x, y).predict(xt)) > 0.9
    assert accuracy(yt, RandomForestClassifier(n_estimators=50, seed=0).fit(x, y).predict(xt)) > 0.9
    # one split cannot express XOR
    assert accuracy(yt, DecisionTreeClassifier(max_depth=1).fit(x, y).predict(xt)) < 0.8


def test_forest_deterministic():
    x, y = xor_data(100, 3)
    a = RandomForestClassifier(n_estimators=20, seed=5).fit(x, y).predict_proba(x)
    b = RandomForestClassifier(n_estimators=20, seed=5).fit(x, y).predict_proba(x)
    np.testing.assert_array_equal(a, b)


# --- logistic regression -------------------------------------------------

def test_logistic_gradient(rng):
    x = rng.normal(size=(25, 4))
    onehot = np.eye(3)[rng.integers(0, 3, 25)]
    theta = rng.normal(size=4 * 3 + 3)
    _, g = logistic_loss_and_grad(theta, x, onehot, 0.7)
    fd = central_diff_grad(lambda t: logistic_loss_and_grad(t, x, onehot, 0.7)[0], theta)
    assert rel_err(g, fd) < 1e-6


def test_logistic_separable_and_symmetric(rng):
    x = np.vstack([rng.normal(-3, 0.5, (30, 2)), rng.normal(3, 0.5, (30, 2))])
    y = np.repeat(["a", "b"], 30)
    assert accuracy(y, LogisticRegression().fit(x, y).predict(x)) == 1.0
    m = LogisticRegression().fit([[-1.0], [1.0]], [0, 1])
    z = m.decision_function([[0.0]])[0]
    assert z[0] == pytest.approx(z[1], abs=1e-9)


def test_logistic_regularisation_limit(rng):
    x = rng.normal(size=(60, 3))
    y = (x[:, 0] > 0.5).astype(int)
    prior = np.bincount(y) / len(y)
    norms, gaps = [], []
    for c in (1.0, 1e-2, 1e-4, 1e-6):
        m = LogisticRegression(C=c).fit(x, y)
        norms.append(np.linalg.norm(m.coef_))
        gaps.append(np.max(np.abs(m.predict_proba(x).mean(axis=0) - prior)))
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-4 and gaps[-1] < 1e-4


def test_standardizer_roundtrip(rng):
    train, test = rng.normal(3, 2, (50, 4)), rng.normal(size=(10, 4))
    s = Standardizer().fit(train)
    np.testing.assert_array_equal(s.transform(test), (test - train.mean(axis=0)) / train.std(axis=0))


# --- MLP -----------------------------------------------------------------

def test_mlp_gradient(rng):
    x = rng.normal(size=(12, 5))
    onehot = np.eye(3)[rng.integers(0, 3, 12)]
    params = init_params([5, 7, 6, 3], rng)
    # nonzero biases keep pre-activations off the ReLU kink at 0
    params = [q + rng.normal(0, 0.1, q.shape) if q.ndim == 1 else q for q in params]
    masks = mlp_mod.dropout_masks(params, 12, 0.25, rng)
    for m in (None, masks):
        _, grads = loss_and_grad(params, x, onehot, m)
        for i in range(len(params)):
            def f(p_i):
                trial = list(params)
                trial[i] = p_i
                return loss_and_grad(trial, x, onehot, m)[0]
            assert rel_err(grads[i], central_diff_grad(f, params[i])) < 1e-4


def test_mlp_separable():
    r = np.random.default_rng(4)
    x = np.vstack([r.normal(-2, 0.5, (40, 3)), r.normal(2, 0.5, (40, 3))])
    y = np.repeat([0, 1], 40)
    m = MLPClassifier(hidden=(16, 8), epochs=200, dropout=0.0, seed=0).fit(x, y)
    assert accuracy(y, m.predict(x)) == 1.0
    assert m.loss_history_[-1] < m.loss_history_[0]


def test_mlp_divergence_names_epoch(monkeypatch):
    real = mlp_mod.loss_and_grad
    calls = {"n": 0}

    def flaky(params, x, onehot, masks=None):
        calls["n"] += 1
        loss, grads = real(params, x, onehot, masks)
        return (math.nan if calls["n"] > 6 else loss), grads

    monkeypatch.setattr(mlp_mod, "loss_and_grad", flaky)
    x, y = xor_data(64, 0)
    with pytest.raises(DivergenceError) as ei:
        MLPClassifier(hidden=(4,), batch_size=32, epochs=10).fit(x, y)
    assert ei.value.epoch == 3


# --- paired t-test -------------------------------------------------------

def test_t_test_matches_scipy(rng):
    for _ in range(20):
        a, b = rng.normal(size=(2, 8))
        ref = stats.ttest_rel(a, b)
        got = paired_t_test(a, b)
        assert got["t"] == pytest.approx(ref.statistic, rel=1e-12)
        assert got["p"] == pytest.approx(ref.pvalue, rel=1e-10)


def test_t_test_edge_cases(rng):
    with pytest.raises(DegenerateTestError):
        paired_t_test([1, 2, 3], [1, 2, 3])
    b = rng.normal(size=5)
    assert paired_t_test(b + 1 + rng.normal(0, 1e-6, 5), b)["p"] < 1e-10
    base = np.array([0.3, -1.2, 0.8, 2.0, -0.4])
    d = base - base.mean()
    d += 2.776 * d.std(ddof=1) / math.sqrt(5)
    res = paired_t_test(d, np.zeros(5))
    assert res["t"] == pytest.approx(2.776)
    assert res["p"] == pytest.approx(0.05, abs=1e-3)


# --- features ------------------------------------------------------------

def diagram(pairs, eps=2.0):
    return PersistenceDiagram(pairs, eps)


def test_features_hand_built():
    d = diagram({0: [(0, 1.0), (0, np.inf)], 1: [(0.5, 1.5), (0.2, 0.2)], 2: np.empty((0, 2))})
    fv = assemble_features([SubjectDiagram("s", "MCI", d)], grid_size=3)[0]
    named = dict(zip(feature_names(grid_size=3), fv.values))
    p = np.array([1, 2]) / 3
    assert named["h0_entropy"] == pytest.approx(-np.sum(p * np.log(p)), abs=1e-15)
    assert named["h0_total_persistence"] == 3.0 and named["h0_max_lifetime"] == 2.0
    assert named["h1_bar_count"] == 1 and named["h1_entropy"] == 0 and named["h1_entropy_present"] == 1
    assert named["h2_entropy_present"] == 0 and named["h2_bar_count"] == 0
    assert [named[f"h0_betti_{i:02d}"] for i in range(3)] == [2, 1, 1]
    assert [named[f"h1_betti_{i:02d}"] for i in range(3)] == [0, 1, 0]
    assert len(fv.values) == 3 * 6 + 3 * 3


def test_features_equal_length_and_consistency(tmp_path):
    a = diagram({0: [(0, 1)], 1: [(0.1, 0.4)]})
    b = diagram({0: [(0, np.inf)]})
    feats = assemble_features([SubjectDiagram("a", "NSR", a), SubjectDiagram("b", "MCI", b)])
    assert len(feats[0].values) == len(feats[1].values) == len(feature_names())
    assert np.all(np.isfinite(feats[1].values))
    save_feature_table(feats, tmp_path / "f.csv")
    back, names = load_feature_table(tmp_path / "f.csv")
    assert names == feature_names()
    np.testing.assert_array_equal(back[1].values, feats[1].values)
    c = diagram({0: [(0, 1)]})
    c.provenance["pipeline"] = {"max_dim": 2}
    with pytest.raises(ConsistencyError):
        assemble_features([SubjectDiagram("a", "NSR", a), SubjectDiagram("c", "NSR", c)])


# --- harness -------------------------------------------------------------

class Memorizer:
    def __init__(self, seed):
        self.table = {}

    def fit(self, x, y):
        self.classes_ = np.unique(y)
        self.table = {row.tobytes(): lab for row, lab in zip(x, y)}
        return self

    def predict_proba(self, x):
        return np.array([self.classes_ == self.table[row.tobytes()] for row in x], dtype=float)


def toy_features(n=30, seed=0):
    r = np.random.default_rng(seed)
    labels = np.array(["NSR", "MCI"] * (n // 2))
    x = r.normal(size=(n, 4)) + (labels == "MCI")[:, None] * 2.0
    return [FeatureVector(f"s{i}", lab, row) for i, (lab, row) in enumerate(zip(labels, x))]


def test_memorizer_on_train_is_perfect():
    rep = train_eval(toy_features(), model_spec=Memorizer, evaluate_on="train")
    m = rep.models["Memorizer"]
    assert m.accuracy_mean == 1.0 and m.kappa == 1.0 and m.accuracy_sd == 0.0


def test_fold_determinism():
    labels = np.repeat(["a", "b", "c"], [10, 7, 5])
    a = stratified_folds(labels, 5, seed=3)
    np.testing.assert_array_equal(a, stratified_folds(labels, 5, seed=3))
    for c in "abc":
        counts = np.bincount(a[labels == c], minlength=5)
        assert counts.max() - counts.min() <= 1
    spec = {"name": "random_forest", "n_estimators": 15}
    r1 = train_eval(toy_features(), model_spec=[spec, "logistic_regression"], seed=9)
    r2 = train_eval(toy_features(), model_spec=[spec, "logistic_regression"], seed=9, jobs=3)
    assert r1.to_json() == r2.to_json()


def test_stratification_error():
    with pytest.raises(StratificationError):
        stratified_folds(["a"] * 10 + ["b"] * 3, 5, seed=0)


def test_report_fields():
    rep = train_eval(toy_features(40), model_spec="decision_tree", folds=4, seed=1)
    m = rep.models["decision_tree"]
    assert 0 <= m.accuracy_mean <= 1 and m.accuracy_sd >= 0
    assert 0 <= m.auc <= 1 and 0 <= m.f1 <= 1 and -1 <= m.kappa <= 1
    assert rep.summary_csv().splitlines()[0] == "Classifier,Task,Acc±SD,AUC,f1 score,Kappa"
    assert rep.positive_class == "MCI"
