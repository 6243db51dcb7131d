"""Training protocol: repeated stratified k-fold cross-validation with random
hyperparameter search, elementwise-median coefficient aggregation, threshold
tuning, and the six-feature-set comparison experiment."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MetricError, ParameterError, ShapeError
from .features import FeatureSet, catalog
from .glm import FitConfig, FittedModel, PenaltySpec, fit, probability
from .metrics import accuracy, confusion_at_threshold, f1_positive, roc_auc

C_RANGE = (1e-4, 1e3)  # inverse penalty strength, sampled log-uniformly
DEFAULT_THRESHOLD_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass(frozen=True)
class CvPlan:
    folds: int = 5
    rounds: int = 100
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if self.rounds < 1:
            raise ParameterError("rounds must be >= 1")


@dataclass(frozen=True)
class HyperDraw:
    kind: str  # "l1" | "l2"
    c: float

    def to_penalty(self) -> PenaltySpec:
        return PenaltySpec(self.kind, self.c)


@dataclass(frozen=True)
class CellResult:
    round_index: int
    fold_index: int
    draw: HyperDraw
    train_auc: float
    val_auc: float
    coefficients: tuple
    converged: bool


@dataclass
class CvReport:
    feature_set_id: str
    plan: CvPlan
    draws_per_fold: int
    cells: list[CellResult] = field(default_factory=list)

    @property
    def coefficient_vectors(self) -> np.ndarray:
        return np.array([c.coefficients for c in self.cells])

    def _stat(self, attr, fn) -> float:
        vals = np.array([getattr(c, attr) for c in self.cells])
        vals = vals[~np.isnan(vals)]
        return float(fn(vals)) if len(vals) else float("nan")

    @property
    def train_auc_mean(self):
        return self._stat("train_auc", np.mean)

    @property
    def train_auc_sd(self):
        return self._stat("train_auc", lambda v: np.std(v, ddof=1))

    @property
    def val_auc_mean(self):
        return self._stat("val_auc", np.mean)

    @property
    def val_auc_sd(self):
        return self._stat("val_auc", lambda v: np.std(v, ddof=1))

    @property
    def convergence_census(self) -> dict:
        n_conv = sum(c.converged for c in self.cells)
        return {"converged": n_conv, "cells": len(self.cells)}

    def to_json(self) -> str:
        doc = {
            "feature_set": self.feature_set_id,
            "plan": {"folds": self.plan.folds, "rounds": self.plan.rounds,
                     "seed": self.plan.seed, "stratified": self.plan.stratified},
            "draws_per_fold": self.draws_per_fold,
            "train_auc_mean": self.train_auc_mean,
            "train_auc_sd": self.train_auc_sd,
            "val_auc_mean": self.val_auc_mean,
            "val_auc_sd": self.val_auc_sd,
            "convergence": self.convergence_census,
            "cells": [
                {"round": c.round_index, "fold": c.fold_index,
                 "penalty": c.draw.kind, "c": c.draw.c,
                 "train_auc": c.train_auc, "val_auc": c.val_auc,
                 "converged": c.converged,
                 "coefficients": list(c.coefficients)}
                for c in self.cells
            ],
        }
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# folds

def kfold_split(labels, plan: CvPlan, round_index: int):
    """Disjoint covering (train, validation) index partitions for one round.

    Deterministic given (plan.seed, round_index). Remainder samples go to
    the earliest folds, so validation sizes are largest-first. Stratified
    plans apply the same rule per class.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if n < plan.folds:
        raise ParameterError(f"{n} samples cannot fill {plan.folds} folds")
    rng = np.random.default_rng(
        np.random.SeedSequence([plan.seed, round_index, 0x5F01D]))

    folds = [[] for _ in range(plan.folds)]
    groups = ([np.flatnonzero(labels == v) for v in (1, 0)]
              if plan.stratified else [np.arange(n)])
    for idx in groups:
        idx = rng.permutation(idx)
        base, rem = divmod(len(idx), plan.folds)
        start = 0
        for f in range(plan.folds):
            size = base + (1 if f < rem else 0)
            folds[f].extend(idx[start:start + size])
            start += size

    out = []
    all_idx = set(range(n))
    for f in range(plan.folds):
        val = np.array(sorted(folds[f]), dtype=int)
        train = np.array(sorted(all_idx - set(folds[f])), dtype=int)
        out.append((train, val))
    return out


# ---------------------------------------------------------------------------
# random search

def _sample_draw(rng) -> HyperDraw:
    kind = "l1" if rng.random() < 0.5 else "l2"
    lo, hi = math.log10(C_RANGE[0]), math.log10(C_RANGE[1])
    return HyperDraw(kind, float(10.0 ** rng.uniform(lo, hi)))


def _safe_auc(scores, labels) -> float:
    try:
        return roc_auc(scores, labels)
    except MetricError:
        return float("nan")


def random_search_cv(X, y, plan: CvPlan, draws_per_fold: int = 20,
                     feature_set: FeatureSet | None = None,
                     fit_tolerance: float = 1e-6,
                     fit_max_iterations: int = 500) -> CvReport:
    """For every (round, fold) cell, fit one model per hyperparameter draw
    on the training part, keep the draw with the best validation AUC, and
    record that fit's coefficients and AUCs.

    rounds x folds cells total; the whole procedure is a pure function of
    (X, y, plan, draws_per_fold).
    """
    if draws_per_fold < 1:
        raise ParameterError("draws_per_fold must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    fs_id = feature_set.identifier if feature_set else f"adhoc{X.shape[1]}"
    report = CvReport(feature_set_id=fs_id, plan=plan,
                      draws_per_fold=draws_per_fold)

    for r in range(plan.rounds):
        for f, (train, val) in enumerate(kfold_split(y, plan, r)):
            rng = np.random.default_rng(
                np.random.SeedSequence([plan.seed, r, f, 0xD12A]))
            best = None
            for _ in range(draws_per_fold):
                draw = _sample_draw(rng)
                res = fit(X[train], y[train],
                          FitConfig(penalty=draw.to_penalty(),
                                    tolerance=fit_tolerance,
                                    max_iterations=fit_max_iterations),
                          feature_set=feature_set)
                beta = res.model.beta
                p_train = beta[0] + X[train] @ beta[1:]
                p_val = beta[0] + X[val] @ beta[1:]
                cell = CellResult(
                    round_index=r, fold_index=f, draw=draw,
                    train_auc=_safe_auc(p_train, y[train]),
                    val_auc=_safe_auc(p_val, y[val]),
                    coefficients=res.model.coefficients,
                    converged=res.converged,
                )
                if best is None or _better(cell, best):
                    best = cell
            report.cells.append(best)
    return report


def _better(a: CellResult, b: CellResult) -> bool:
    av = -math.inf if math.isnan(a.val_auc) else a.val_auc
    bv = -math.inf if math.isnan(b.val_auc) else b.val_auc
    return av > bv


# ---------------------------------------------------------------------------
# aggregation and threshold tuning

def aggregate_median_model(coefficient_vectors, feature_set: FeatureSet,
                           threshold: float = 0.5,
                           provenance: str = "") -> FittedModel:
    """Elementwise median; even counts take the midpoint of the two central
    order statistics (numpy convention)."""
    M = np.asarray(coefficient_vectors, dtype=float)
    if M.ndim != 2:
        raise ShapeError("expected a matrix of coefficient vectors")
    if M.shape[1] != feature_set.arity + 1:
        raise ShapeError(
            f"coefficient vectors have arity {M.shape[1]}, "
            f"expected {feature_set.arity + 1}")
    med = np.median(M, axis=0)
    return FittedModel(
        feature_set=feature_set,
        coefficients=tuple(float(v) for v in med),
        threshold=threshold,
        provenance=provenance or f"median of {M.shape[0]} coefficient vectors",
    )


def tune_threshold(model: FittedModel, datasets, objective: str = "accuracy",
                   grid=None) -> float:
    """Scan a probability grid and return the threshold maximizing the
    objective summed over the supplied (X, y) datasets; ties break toward
    the larger threshold (favoring specificity)."""
    if grid is None:
        grid = DEFAULT_THRESHOLD_GRID
    grid = list(grid)
    if not grid:
        raise ParameterError("threshold grid is empty")
    obj_fn = {"accuracy": accuracy, "f1_positive": f1_positive}.get(objective)
    if obj_fn is None:
        raise ParameterError(f"unknown objective: {objective!r}")

    scored = [(probability(model, np.asarray(X, dtype=float)),
               np.asarray(y, dtype=int)) for X, y in datasets]
    best_t, best_v = None, -math.inf
    for t in sorted(grid):
        total = 0.0
        for p, y in scored:
            total += obj_fn(confusion_at_threshold(p, y, t))
        if total >= best_v:  # >= : ties resolve to the larger threshold
            best_t, best_v = t, total
    return float(best_t)


# ---------------------------------------------------------------------------
# feature-set comparison

@dataclass(frozen=True)
class Table1Row:
    feature_set_id: str
    train_auc_mean: float
    train_auc_sd: float
    val_auc_mean: float
    val_auc_sd: float


@dataclass
class Table1Report:
    rows: list[Table1Row]

    def to_csv(self) -> str:
        lines = ["feature_set,train_auc_mean,train_auc_sd,val_auc_mean,val_auc_sd"]
        for r in self.rows:
            lines.append(f"{r.feature_set_id},{r.train_auc_mean!r},"
                         f"{r.train_auc_sd!r},{r.val_auc_mean!r},{r.val_auc_sd!r}")
        return "\n".join(lines) + "\n"


def table1_experiment(cohort, plan: CvPlan, draws_per_fold: int = 20,
                      **fit_kwargs):
    """random_search_cv over each of the six nested feature sets, one sample
    per patient (final complete daily record). Returns (Table1Report,
    per-set CvReport dict)."""
    from .data_model import final_record_matrix
    rows, reports = [], {}
    for fs in catalog():
        X, y, _ = final_record_matrix(cohort, fs)
        rep = random_search_cv(X, y, plan, draws_per_fold,
                               feature_set=fs, **fit_kwargs)
        reports[fs.identifier] = rep
        rows.append(Table1Row(
            feature_set_id=fs.identifier,
            train_auc_mean=rep.train_auc_mean,
            train_auc_sd=rep.train_auc_sd,
            val_auc_mean=rep.val_auc_mean,
            val_auc_sd=rep.val_auc_sd,
        ))
    return Table1Report(rows), reports
