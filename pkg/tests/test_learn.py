import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_diversity.errors import ParameterError
from cascade_diversity.learn import (
    ForestParams,
    binary_metrics,
    cross_validate,
    predict,
    smote,
    stability_weights,
    stratified_folds,
    sweep_csv,
    sweep_thresholds,
    threshold_pairs,
    train_forest,
)
from cascade_diversity.learn import validation
from cascade_diversity.learn.stability import l1_logistic


# --- SMOTE -----------------------------------------------------------------

def test_smote_zero_amount():
    out = smote(np.random.rand(8, 3), 0)
    assert out.rows.shape == (0, 3)


def test_smote_identical_rows():
    x = np.array([[2.0, -1.0], [2.0, -1.0]])
    out = smote(x, 7, k_neighbors=1, seed=0)
    assert np.array_equal(out.rows, np.tile(x[0], (7, 1)))


def test_smote_on_segment():
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    out = smote(x, 5, k_neighbors=1, seed=3)
    assert out.rows.shape == (5, 2)
    assert np.allclose(out.rows[:, 0], out.rows[:, 1])
    assert np.all((out.rows >= 0) & (out.rows <= 1))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(3, 30),
    st.integers(1, 5),
    st.integers(0, 60),
    st.integers(0, 2**31),
)
def test_smote_betweenness(n, d, amount, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d)) * rng.uniform(0.1, 100, size=d)
    k = min(5, n - 1)
    out = smote(x, amount, k_neighbors=k, seed=seed)
    assert out.rows.shape == (amount, d)
    lo = np.minimum(x[out.base], x[out.neighbor])
    hi = np.maximum(x[out.base], x[out.neighbor])
    assert np.all(out.rows >= lo - 1e-9) and np.all(out.rows <= hi + 1e-9)
    assert np.all((out.gap >= 0) & (out.gap <= 1))
    assert np.all(out.base != out.neighbor) or n == 1


def test_smote_neighbors_are_k_nearest():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    out = smote(x, 200, k_neighbors=3, seed=1, scale=np.ones(3))
    dist = np.linalg.norm(x[:, None] - x[None], axis=2)
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1)[:, :3]
    for b, nb in zip(out.base, out.neighbor):
        assert nb in nearest[b]


def test_smote_too_few_minority():
    with pytest.raises(ParameterError, match="lower k_neighbors"):
        smote(np.random.rand(5, 2), 3, k_neighbors=5)


# --- forest ----------------------------------------------------------------

def xor_data(seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    labels = np.array([0, 0, 1, 1])
    idx = np.repeat(np.arange(4), 100)
    return centers[idx] + rng.normal(scale=0.1, size=(400, 2)), labels[idx]


def test_forest_rejects_single_class():
    with pytest.raises(ParameterError):
        train_forest(np.random.rand(10, 2), np.zeros(10))


def test_forest_xor():
    x, y = xor_data()
    model = train_forest(x, y, ForestParams(n_trees=25, max_depth=4), seed=0)
    pred, score = predict(model, x)
    assert (pred == y).mean() >= 0.95
    assert np.all((score >= 0) & (score <= 1))


def test_forest_deterministic_and_structure():
    x, y = xor_data(1)
    a = train_forest(x, y, ForestParams(n_trees=15), seed=4)
    b = train_forest(x, y, ForestParams(n_trees=15), seed=4)
    probe = np.random.default_rng(9).uniform(-0.5, 1.5, size=(300, 2))
    assert np.array_equal(predict(a, probe)[1], predict(b, probe)[1])
    for tree in a.trees:
        t = tree.tree_
        split = t.children_left >= 0
        assert np.all(t.feature[split] < 2)
        assert np.all(t.value[~split].sum(axis=-1) > 0)


def test_forest_order_invariance():
    x, y = xor_data(2)
    model = train_forest(x, y, ForestParams(n_trees=11), seed=0)
    base = predict(model, x)
    model.estimator.estimators_ = model.estimator.estimators_[::-1]
    again = predict(model, x)
    assert np.array_equal(base[0], again[0]) and np.array_equal(base[1], again[1])


def test_predict_edge_cases():
    x, y = xor_data()
    model = train_forest(x, y, ForestParams(n_trees=10), seed=0)
    pred, score = predict(model, np.zeros((0, 2)))
    assert pred.size == 0 and score.size == 0
    with pytest.raises(ParameterError):
        predict(model, np.zeros((3, 5)))
    single = train_forest(x, y, ForestParams(n_trees=1), seed=0)
    leaf = single.trees[0].predict(x[:20]).astype(int)
    assert np.array_equal(predict(single, x[:20])[0], single.estimator.classes_[leaf])


def test_tie_vote_is_nonviral():
    x, y = xor_data()
    model = train_forest(x, y, ForestParams(n_trees=10), seed=0)

    class Fixed:
        def __init__(self, out):
            self.out = out

        def predict(self, rows):
            return np.full(rows.shape[0], float(self.out))

    model.estimator.estimators_ = [Fixed(1)] * 5 + [Fixed(0)] * 5
    pred, score = predict(model, x[:3])
    assert list(pred) == [0, 0, 0] and np.allclose(score, 0.5)


# --- metrics and CV ----------------------------------------------------------

def test_binary_metrics():
    p, r, f = binary_metrics(7, 3, 7)
    assert (p, r) == (0.7, 0.5)
    assert f == pytest.approx(2 * 0.35 / 1.2)
    assert binary_metrics(0, 0, 5) == (0.0, 0.0, 0.0)


def imbalanced(seed=0, n=600, pos=40):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(50, 300, size=n)
    sizes[:pos] = rng.integers(500, 2000, size=pos)
    x = rng.normal(size=(n, 4))
    x[:, 0] += (sizes >= 500) * 2.5
    x[:, 1] += np.log(sizes) * 0.3
    return x, sizes


def test_stratification_within_one():
    _, sizes = imbalanced()
    y = (sizes >= 500).astype(int)
    frac = y.mean()
    for r in range(3):
        folds = stratified_folds(y, 10, seed=5, repeat=r)
        assert sorted(np.concatenate([t for _, t in folds]).tolist()) == list(range(len(y)))
        for _, test in folds:
            assert abs(y[test].sum() - frac * len(test)) <= 1


def test_cv_too_few_positives():
    x, sizes = imbalanced(pos=5)
    with pytest.raises(ParameterError, match="at least 10"):
        cross_validate(x, sizes, folds=10, repeats=1)


def test_cv_counts_and_identities():
    x, sizes = imbalanced()
    rep = cross_validate(x, sizes, 500, 500, folds=5, repeats=2, params=ForestParams(n_trees=20))
    assert len(rep.folds) == 10
    pos = int((sizes >= 500).sum())
    for r in range(2):
        rows = [f for f in rep.folds if f.repeat == r]
        assert sum(f.tp + f.fn for f in rows) == pos
        for f in rows:
            assert f.precision * (f.tp + f.fp) == pytest.approx(f.tp)
            if f.precision + f.recall:
                assert f.f1 == pytest.approx(2 * f.precision * f.recall / (f.precision + f.recall))
    assert rep.mean("f1") > 0.5
    csv = rep.to_csv().splitlines()
    assert csv[0] == (
        "th_tr,th_ts,fold,repeat,precision,recall,f1,tp,fp,fn,"
        "recalled_avg_size,nonrecalled_avg_size"
    )
    assert len(csv) == 11


def test_cv_thread_independence():
    x, sizes = imbalanced(3)
    kw = dict(folds=5, repeats=2, params=ForestParams(n_trees=10), seed=8)
    a = cross_validate(x, sizes, 400, 500, threads=1, **kw)
    b = cross_validate(x, sizes, 400, 500, threads=4, **kw)
    assert a.to_csv() == b.to_csv()


def test_cv_no_leakage(monkeypatch):
    """SMOTE only sees training rows relabelled with TH_tr; tests keep TH_ts labels."""
    x, sizes = imbalanced(4)
    x = np.hstack([x, np.arange(len(x))[:, None]])  # row id column
    seen = []
    real_smote = validation.smote
    real_train = validation.train_forest
    real_predict = validation.predict

    def spy_smote(minority, amount, k, seed=None, scale=None):
        seen.append(("smote", set(minority[:, -1].astype(int).tolist())))
        return real_smote(minority, amount, k, seed=seed, scale=scale)

    def spy_train(xt, yt, params, seed=0):
        seen.append(("train", xt.shape[0]))
        return real_train(xt, yt, params, seed=seed)

    def spy_predict(model, rows):
        seen.append(("test", set(rows[:, -1].astype(int).tolist())))
        return real_predict(model, rows)

    monkeypatch.setattr(validation, "smote", spy_smote)
    monkeypatch.setattr(validation, "train_forest", spy_train)
    monkeypatch.setattr(validation, "predict", spy_predict)
    cross_validate(x, sizes, 300, 500, folds=5, repeats=1, params=ForestParams(n_trees=5))
    for i in range(0, len(seen), 3):
        (_, minority), (_, n_train), (_, test_ids) = seen[i : i + 3]
        assert not minority & test_ids
        assert all(sizes[j] >= 300 for j in minority)
        train_ids = set(range(len(x))) - test_ids
        n_pos = sum(sizes[j] >= 300 for j in train_ids)
        assert n_train == 2 * (len(train_ids) - n_pos)


def test_sweep_single_matches_cv():
    x, sizes = imbalanced(5)
    kw = dict(folds=5, repeats=1, params=ForestParams(n_trees=10), seed=2)
    rows = sweep_thresholds(x, sizes, [(500, 500)], **kw)
    assert len(rows) == 1
    assert rows[0].report.to_csv() == cross_validate(x, sizes, 500, 500, **kw).to_csv()


def test_sweep_keeps_failures():
    x, sizes = imbalanced(6)
    rows = sweep_thresholds(
        x, sizes, threshold_pairs([300, 5000], [300, 5000]), folds=5, repeats=1,
        params=ForestParams(n_trees=5),
    )
    assert rows[0].report is not None and rows[1].report is None
    assert "need at least" in rows[1].error
    text = sweep_csv(rows).splitlines()
    assert len(text) == 3 and text[2].startswith("5000,5000,")


def test_threshold_pairs():
    assert threshold_pairs([300, 400], 500) == [(300, 500), (400, 500)]
    assert threshold_pairs([300, 400], [300, 400]) == [(300, 300), (400, 400)]
    with pytest.raises(ParameterError):
        threshold_pairs([1, 2], [3])


# --- stability selection ----------------------------------------------------

def test_l1_logistic_matches_sklearn():
    from sklearn.linear_model import LogisticRegression

    rng = np.random.default_rng(0)
    x = rng.normal(size=(300, 5))
    y = (x[:, 0] - 0.5 * x[:, 1] + rng.normal(size=300) > 0).astype(float)
    lam = 0.02
    w, b, ok = l1_logistic(x, y, lam, tol=1e-10, max_iter=20000)
    assert ok
    ref = LogisticRegression(
        penalty="l1", C=1 / (lam * len(y)), solver="liblinear", tol=1e-10, max_iter=10000,
        intercept_scaling=1e4,
    ).fit(x, y)
    assert np.allclose(w, ref.coef_[0], atol=1e-3)


def planted(seed, n=400, noise=6):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.3).astype(int)
    signal = y + rng.normal(scale=0.05, size=n)
    return np.column_stack([signal, rng.normal(size=(n, noise))]), y


def test_stability_planted_signal():
    sig, noise = [], []
    for seed in range(10):
        x, y = planted(seed)
        rep = stability_weights(x, y, runs=30, seed=seed)
        sig.append(rep.weights[0])
        noise.append(rep.weights[1:].max())
        assert np.all((rep.weights >= 0) & (rep.weights <= 1))
    assert min(sig) >= 0.9
    assert np.mean(noise) <= 0.2


def test_stability_duplicate_column_splits():
    x, y = planted(1)
    solo = stability_weights(x, y, runs=40, seed=1).weights[0]
    dup = stability_weights(np.column_stack([x[:, :1], x]), y, runs=40, seed=1).weights
    assert dup[0] < solo and dup[1] < solo
    assert dup[0] + dup[1] >= solo


def test_stability_report_csv():
    x, y = planted(2, noise=2)
    rep = stability_weights(x, y, names=["sig", "n1", "n2"], runs=10, seed=0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "feature,weight,selected"
    assert lines[1].startswith("sig,") and lines[1].endswith(",1")


def test_stability_errors():
    with pytest.raises(ParameterError):
        stability_weights(np.random.rand(20, 2), np.zeros(20))
    x, y = planted(3)
    with pytest.raises(ParameterError, match="failed"):
        stability_weights(x, y, runs=5, max_iter=1)
