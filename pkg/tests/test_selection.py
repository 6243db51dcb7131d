import math

import numpy as np
import pytest

from prognosis.data_model import final_record_matrix
from prognosis.errors import ParameterError, ShapeError
from prognosis.features import feature_set_by_id
from prognosis.glm import FitConfig, FittedModel, fit
from prognosis.metrics import roc_auc
from prognosis.selection import (
    CvPlan,
    _sample_draw,
    aggregate_median_model,
    kfold_split,
    random_search_cv,
    table1_experiment,
    tune_threshold,
)

SET1 = feature_set_by_id("set1")


def identity_model(threshold=0.5):
    """probability = sigmoid(x) on the single-feature set, so test scores
    can be dialed in directly via x = logit(p)."""
    return FittedModel(feature_set=SET1, coefficients=(0.0, 1.0),
                       threshold=threshold)


def logit(p):
    return math.log(p / (1 - p))


# ---------------------------------------------------------------------------
# folds

def test_kfold_even_split_sizes():
    plan = CvPlan(folds=5, rounds=1, seed=0, stratified=False)
    splits = kfold_split(np.zeros(10, dtype=int) + [0, 1] * 5, plan, 0)
    assert [len(val) for _, val in splits] == [2, 2, 2, 2, 2]


def test_kfold_remainder_goes_to_earliest_folds():
    plan = CvPlan(folds=5, rounds=1, seed=0, stratified=False)
    splits = kfold_split(np.arange(11) % 2, plan, 0)
    assert [len(val) for _, val in splits] == [3, 2, 2, 2, 2]


def test_kfold_is_a_disjoint_cover(rng):
    labels = (rng.random(53) < 0.4).astype(int)
    plan = CvPlan(folds=5, rounds=1, seed=3)
    splits = kfold_split(labels, plan, 0)
    seen = []
    for train, val in splits:
        assert set(train) & set(val) == set()
        assert len(train) + len(val) == len(labels)
        seen.extend(val)
    assert sorted(seen) == list(range(len(labels)))


def test_kfold_stratification_balances_classes():
    labels = np.array([1] * 20 + [0] * 80)
    plan = CvPlan(folds=5, rounds=1, seed=1, stratified=True)
    for _, val in kfold_split(labels, plan, 0):
        assert labels[val].sum() == 4  # 20 positives spread 4 per fold


def test_kfold_deterministic_per_round():
    labels = np.arange(40) % 2
    plan = CvPlan(folds=4, rounds=2, seed=9)
    a = kfold_split(labels, plan, 0)
    b = kfold_split(labels, plan, 0)
    c = kfold_split(labels, plan, 1)
    for (ta, va), (tb, vb) in zip(a, b):
        assert np.array_equal(va, vb) and np.array_equal(ta, tb)
    assert any(not np.array_equal(va, vc)
               for (_, va), (_, vc) in zip(a, c))


def test_kfold_rejects_too_few_samples():
    with pytest.raises(ParameterError):
        kfold_split(np.array([0, 1, 0]), CvPlan(folds=5, rounds=1), 0)


def test_cv_plan_validation():
    with pytest.raises(ParameterError):
        CvPlan(folds=1, rounds=1)
    with pytest.raises(ParameterError):
        CvPlan(folds=2, rounds=0)


# ---------------------------------------------------------------------------
# random search

def _toy_problem(rng, n=90):
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] + 0.5 * rng.normal(size=n) > 0).astype(int)
    return X, y


def test_random_search_produces_one_cell_per_round_and_fold(rng):
    X, y = _toy_problem(rng)
    plan = CvPlan(folds=5, rounds=2, seed=11)
    report = random_search_cv(X, y, plan, draws_per_fold=2)
    assert len(report.cells) == 10
    assert {(c.round_index, c.fold_index) for c in report.cells} == {
        (r, f) for r in range(2) for f in range(5)}
    assert report.coefficient_vectors.shape == (10, 3)


def test_random_search_keeps_best_validation_draw(rng):
    X, y = _toy_problem(rng)
    plan = CvPlan(folds=3, rounds=1, seed=21)
    draws_per_fold = 4
    report = random_search_cv(X, y, plan, draws_per_fold=draws_per_fold)
    splits = kfold_split(y, plan, 0)
    for cell in report.cells:
        train, val = splits[cell.fold_index]
        # replay the cell's deterministic draw stream and refit every draw
        stream = np.random.default_rng(
            np.random.SeedSequence([plan.seed, 0, cell.fold_index, 0xD12A]))
        best_auc = -math.inf
        for _ in range(draws_per_fold):
            draw = _sample_draw(stream)
            res = fit(X[train], y[train],
                      FitConfig(penalty=draw.to_penalty(), tolerance=1e-6,
                                max_iterations=500))
            beta = res.model.beta
            auc = roc_auc(beta[0] + X[val] @ beta[1:], y[val])
            best_auc = max(best_auc, auc)
        assert cell.val_auc == best_auc


def test_random_search_is_deterministic(rng):
    X, y = _toy_problem(rng)
    plan = CvPlan(folds=3, rounds=2, seed=5)
    a = random_search_cv(X, y, plan, draws_per_fold=2)
    b = random_search_cv(X, y, plan, draws_per_fold=2)
    assert a.to_json() == b.to_json()


def test_random_search_validates_draws(rng):
    X, y = _toy_problem(rng)
    with pytest.raises(ParameterError):
        random_search_cv(X, y, CvPlan(folds=3, rounds=1), draws_per_fold=0)


def test_hyper_draw_range():
    stream = np.random.default_rng(0)
    draws = [_sample_draw(stream) for _ in range(200)]
    assert {d.kind for d in draws} == {"l1", "l2"}
    cs = [d.c for d in draws]
    assert min(cs) >= 1e-4 and max(cs) <= 1e3
    # log-uniform: both decades below 0.1 and above 10 get hit
    assert any(c < 0.1 for c in cs) and any(c > 10 for c in cs)


# ---------------------------------------------------------------------------
# aggregation

def test_median_odd_count():
    fs = SET1
    model = aggregate_median_model(
        [[0.0, 1.0], [1.0, 2.0], [2.0, 9.0]], fs)
    assert model.coefficients == (1.0, 2.0)


def test_median_even_count_takes_midpoint():
    model = aggregate_median_model([[0.0, 1.0], [0.0, 2.0]], SET1)
    assert model.coefficients == (0.0, 1.5)


def test_median_constant_vectors():
    model = aggregate_median_model([[0.5, 2.0]] * 7, SET1)
    assert model.coefficients == (0.5, 2.0)


def test_median_commutes_with_permutation(rng):
    M = rng.normal(size=(9, 2))
    a = aggregate_median_model(M, SET1)
    b = aggregate_median_model(M[rng.permutation(9)], SET1)
    assert a.coefficients == b.coefficients


def test_median_shape_checks():
    with pytest.raises(ShapeError):
        aggregate_median_model(np.zeros((3, 4)), SET1)
    with pytest.raises(ShapeError):
        aggregate_median_model(np.zeros(4), SET1)


# ---------------------------------------------------------------------------
# threshold tuning

def test_tune_threshold_degenerate_grid():
    X = np.array([[logit(0.1)], [logit(0.9)]])
    y = np.array([0, 1])
    assert tune_threshold(identity_model(), [(X, y)], grid=[0.8]) == 0.8


def test_tune_threshold_ties_resolve_to_larger():
    # negatives score 0.2, positives 0.95: every grid threshold in
    # [0.2, 0.95) is perfect, and 0.9 is the largest such grid point
    X = np.array([[logit(0.2)]] * 5 + [[logit(0.95)]] * 5)
    y = np.array([0] * 5 + [1] * 5)
    assert tune_threshold(identity_model(), [(X, y)]) == 0.9


def test_tune_threshold_sums_over_datasets():
    # dataset A prefers low thresholds, dataset B high ones; the tuned value
    # maximizes the summed accuracy, not either alone
    Xa = np.array([[logit(0.05)], [logit(0.3)], [logit(0.35)]])
    ya = np.array([0, 1, 1])
    Xb = np.array([[logit(0.6)], [logit(0.65)], [logit(0.95)]])
    yb = np.array([0, 0, 1])
    t = tune_threshold(identity_model(), [(Xa, ya), (Xb, yb)])
    best = None
    for cand in [round(0.05 * i, 2) for i in range(1, 20)]:
        total = sum(
            np.mean(( expit_scores(X) > cand).astype(int) == y)
            for X, y in [(Xa, ya), (Xb, yb)])
        if best is None or total >= best[1]:
            best = (cand, total)
    assert t == best[0]


def expit_scores(X):
    return 1.0 / (1.0 + np.exp(-X[:, 0]))


def test_tune_threshold_f1_objective():
    X = np.array([[logit(0.3)]] * 8 + [[logit(0.85)]] * 2)
    y = np.array([0] * 8 + [1] * 2)
    t = tune_threshold(identity_model(), [(X, y)], objective="f1_positive")
    assert 0.3 <= t < 0.85


def test_tune_threshold_validation():
    X, y = np.array([[0.0], [1.0]]), np.array([0, 1])
    with pytest.raises(ParameterError):
        tune_threshold(identity_model(), [(X, y)], grid=[])
    with pytest.raises(ParameterError):
        tune_threshold(identity_model(), [(X, y)], objective="recall")


# ---------------------------------------------------------------------------
# feature-set comparison

def test_table1_smoke(small_cohort):
    plan = CvPlan(folds=5, rounds=1, seed=0)
    table, reports = table1_experiment(small_cohort, plan, draws_per_fold=1)
    assert [r.feature_set_id for r in table.rows] == [
        f"set{i}" for i in range(1, 7)]
    for row in table.rows:
        assert 0.0 <= row.val_auc_mean <= 1.0
    assert set(reports) == {f"set{i}" for i in range(1, 7)}
    csv_text = table.to_csv()
    assert csv_text.startswith(
        "feature_set,train_auc_mean,train_auc_sd,val_auc_mean,val_auc_sd\n")
    assert csv_text.count("\n") == 7


def test_report_summaries_ignore_nan_cells(small_cohort):
    fs = feature_set_by_id("set5")
    X, y, _ = final_record_matrix(small_cohort, fs)
    report = random_search_cv(X, y, CvPlan(folds=5, rounds=1, seed=2),
                              draws_per_fold=1, feature_set=fs)
    assert not math.isnan(report.val_auc_mean)
    census = report.convergence_census
    assert census["cells"] == 5
    assert 0 <= census["converged"] <= 5
