"""Penalized logistic regression: likelihood, proximal solver, Wald inference,
adjusted pseudo-R², and forward stepwise selection over interaction terms.

Coefficients always live in raw feature units. The solver internally works in
exactly rescaled coordinates (an equivalence transform, not standardization):
the returned minimizer and the optimality checks are for the raw-unit
objective J(beta) = NLL(beta) + (1/c) * P(beta[1:]).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import __version__
from .errors import (
    DataError,
    DegenerateDataError,
    InferenceError,
    ParameterError,
    ShapeError,
)
from .features import (
    INTERACTIONS,
    MAIN_EFFECTS,
    FeatureSet,
    feature_set_by_id,
    feature_set_for_members,
)

# Median coefficient vector (intercept first) and decision threshold of the
# reference model shipped as fixtures/published_model.json.
PUBLISHED_COEFFICIENTS = (-4.976, 1.440e-2, -3.053e-1, 4.378e-2, 4.766e-4, -6.748e-5)
PUBLISHED_THRESHOLD = 0.8


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind and inverse strength c (larger c = weaker penalty)."""

    kind: str  # "l1" | "l2"
    c: float

    def __post_init__(self):
        if self.kind not in ("l1", "l2"):
            raise ParameterError(f"unknown penalty kind: {self.kind!r}")
        if not (self.c > 0):
            raise ParameterError("penalty strength c must be positive")


@dataclass(frozen=True)
class FitConfig:
    penalty: PenaltySpec | None = None  # None = unpenalized maximum likelihood
    max_iterations: int = 10_000
    tolerance: float = 1e-8
    # intercept is never penalized; kept explicit so the contract is visible
    intercept_penalized: bool = False

    def __post_init__(self):
        if not (self.tolerance > 0):
            raise ParameterError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if self.intercept_penalized:
            raise ParameterError("intercept penalization is not supported")


@dataclass(frozen=True, eq=False)
class FittedModel:
    feature_set: FeatureSet
    coefficients: tuple  # intercept first, length = arity + 1
    threshold: float = 0.5
    provenance: str = ""

    def __post_init__(self):
        if len(self.coefficients) != self.feature_set.arity + 1:
            raise ShapeError(
                f"expected {self.feature_set.arity + 1} coefficients, "
                f"got {len(self.coefficients)}"
            )
        if not (0.0 < self.threshold < 1.0):
            raise ParameterError("threshold must lie in (0, 1)")

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)


@dataclass(frozen=True)
class FitResult:
    model: FittedModel
    converged: bool
    iterations: int
    residual: float  # optimality residual at termination (inf-norm)
    objective: float
    objective_trace: tuple = ()  # objective at each accepted iterate


@dataclass(frozen=True)
class InferenceReport:
    terms: tuple  # "intercept" first, then feature names
    coefficients: tuple
    std_errors: tuple
    z_values: tuple
    p_values: tuple
    ll_model: float
    ll_null: float
    pseudo_r2: float
    adjusted_pseudo_r2: float


def published_model() -> FittedModel:
    return FittedModel(
        feature_set=feature_set_by_id("set5"),
        coefficients=PUBLISHED_COEFFICIENTS,
        threshold=PUBLISHED_THRESHOLD,
        provenance="reference coefficients (median of 500 cross-validation fits)",
    )


# ---------------------------------------------------------------------------
# scoring

def log_odds(model: FittedModel, x) -> float | np.ndarray:
    """Linear predictor beta0 + sum_i beta_i x_i; x is one feature vector or
    a (n, arity) matrix."""
    x = np.asarray(x, dtype=float)
    k = model.feature_set.arity
    if x.shape[-1] != k:
        raise ShapeError(f"feature vector arity {x.shape[-1]} != {k}")
    b = model.beta
    return b[0] + x @ b[1:]


def probability(model: FittedModel, x):
    return expit(log_odds(model, x))


def predict(model: FittedModel, x):
    """Strict rule: predict death (1) iff probability > threshold."""
    return (probability(model, x) > model.threshold).astype(int)


# ---------------------------------------------------------------------------
# likelihood

def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.size == 0:
        raise DataError("empty dataset")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0/1")
    return y.astype(float)


def negative_log_likelihood(beta, X, y):
    """Bernoulli NLL sum_i [log(1 + exp(l_i)) - y_i l_i] and its gradient,
    both with respect to beta = (intercept, slopes)."""
    y = _check_labels(y)
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    l = beta[0] + X @ beta[1:]
    nll = float(np.sum(np.logaddexp(0.0, l) - y * l))
    r = expit(l) - y
    grad = np.concatenate(([r.sum()], X.T @ r))
    return nll, grad


def _null_log_likelihood(y) -> float:
    p = float(np.mean(y))
    if p in (0.0, 1.0):
        raise DegenerateDataError("dataset contains a single outcome class")
    n = len(y)
    return n * (p * math.log(p) + (1 - p) * math.log(1 - p))


# ---------------------------------------------------------------------------
# solver

def _to_raw(u, m, s) -> np.ndarray:
    beta = u / s
    beta[0] = u[0] - beta[1:] @ m[1:]
    return beta


def _kkt_components(g_raw, beta, penalty: PenaltySpec | None) -> np.ndarray:
    """Per-coordinate optimality residual in raw coordinates. g_raw is the
    NLL gradient (intercept first); the intercept is never penalized."""
    if penalty is None:
        return np.abs(g_raw)
    inv_c = 1.0 / penalty.c
    if penalty.kind == "l2":
        full = g_raw.copy()
        full[1:] += inv_c * beta[1:]
        return np.abs(full)
    # l1 KKT: zero coords need |g| <= 1/c, nonzero need g + sign(b)/c = 0
    r = np.abs(g_raw).copy()
    for j in range(1, len(beta)):
        if beta[j] == 0.0:
            r[j] = max(0.0, abs(g_raw[j]) - inv_c)
        else:
            r[j] = abs(g_raw[j] + math.copysign(inv_c, beta[j]))
    return r


def kkt_residual(g_raw, beta, penalty: PenaltySpec | None) -> float:
    """Inf-norm raw-coordinate KKT residual of J = NLL + (1/c) P."""
    return float(np.max(_kkt_components(g_raw, beta, penalty)))


def fit(X, y, config: FitConfig = FitConfig(),
        feature_set: FeatureSet | None = None) -> FitResult:
    """Minimize NLL(beta) + (1/c) P(beta[1:]) by a monotone accelerated
    proximal gradient method with backtracking line search.

    Initialization is the zero vector; the method is deterministic. Returns
    a FitResult flagged non-converged if the optimality residual never
    reaches config.tolerance within config.max_iterations.
    """
    y = _check_labels(y)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ShapeError("X must be (n_samples, n_features) matching y")
    if not np.isfinite(X).all():
        raise DataError("features must be finite")
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("dataset contains a single outcome class")

    n, k = X.shape
    # exact reparameterization for conditioning: center and scale columns.
    # Slopes are untouched up to the diagonal scale (penalty stays separable)
    # and the free intercept absorbs the centering shift.
    m = np.concatenate(([0.0], X.mean(axis=0)))
    s = np.concatenate(([1.0], X.std(axis=0)))
    s[s == 0.0] = 1.0
    Xs = np.hstack([np.ones((n, 1)), (X - m[1:]) / s[1:]])
    # termination compares the per-coordinate raw KKT residual against
    # tolerance * coordinate scale; for O(1) features this reduces to the
    # plain raw-coordinate criterion
    scale = np.maximum(1.0, s + np.abs(m))

    penalty = config.penalty
    inv_c = 0.0 if penalty is None else 1.0 / penalty.c
    # l2 lives in the smooth part; l1 in the prox
    q = np.zeros(k + 1)
    w = np.zeros(k + 1)
    if penalty is not None and penalty.kind == "l2":
        q[1:] = inv_c / (s[1:] ** 2)
    if penalty is not None and penalty.kind == "l1":
        w[1:] = inv_c / s[1:]

    def smooth(u):
        l = Xs @ u
        val = float(np.sum(np.logaddexp(0.0, l) - y * l)) + 0.5 * float(q @ (u * u))
        r = expit(l) - y
        grad = Xs.T @ r + q * u
        return val, grad, r

    def nonsmooth(u):
        return float(w @ np.abs(u))

    def prox(v, step):
        if penalty is None or penalty.kind == "l2":
            return v
        t = step * w
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)

    u = np.zeros(k + 1)
    u_prev = u.copy()
    z = u.copy()
    t_mom = 1.0
    F_cur = smooth(u)[0] + nonsmooth(u)
    trace = [F_cur]
    L = 1.0
    converged = False
    residual = math.inf
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        fz, gz, _ = smooth(z)
        while True:
            u_new = prox(z - gz / L, 1.0 / L)
            d = u_new - z
            f_new, g_new, r_new = smooth(u_new)
            if f_new <= fz + gz @ d + 0.5 * L * (d @ d) + 1e-12 * (1 + abs(fz)):
                break
            L *= 2.0
        F_new = f_new + nonsmooth(u_new)
        if F_new > F_cur + 1e-12 * (1 + abs(F_cur)):
            # momentum overshot: restart from the last accepted iterate
            t_mom = 1.0
            z = u.copy()
            continue

        # optimality check in raw coordinates (NLL gradient only)
        gu = g_new - q * u_new
        g_raw = s * gu + m * gu[0]
        beta = _to_raw(u_new, m, s)
        comps = _kkt_components(g_raw, beta, penalty)
        residual = float(np.max(comps))
        scaled_ok = bool(np.all(comps <= config.tolerance * scale))

        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        z = u_new + ((t_mom - 1.0) / t_next) * (u_new - u)
        u_prev, u, t_mom = u, u_new, t_next
        F_cur = F_new
        trace.append(F_cur)
        L *= 0.95

        if scaled_ok:
            converged = True
            break

    beta = _to_raw(u, m, s)
    if penalty is not None and penalty.kind == "l1":
        # exact zeros from soft thresholding survive the rescaling
        beta[1:][u[1:] == 0.0] = 0.0

    if feature_set is None:
        feature_set = _anonymous_feature_set(k)
    model = FittedModel(
        feature_set=feature_set,
        coefficients=tuple(float(b) for b in beta),
        threshold=0.5,
        provenance=_provenance_string(config, n),
    )
    return FitResult(
        model=model,
        converged=converged,
        iterations=iterations,
        residual=residual,
        objective=F_cur,
        objective_trace=tuple(trace),
    )


def _anonymous_feature_set(k: int) -> FeatureSet:
    # positional names for ad-hoc design matrices; bypasses the biomarker
    # name validation, which only applies to catalog-backed sets
    fs = FeatureSet.__new__(FeatureSet)
    object.__setattr__(fs, "identifier", f"adhoc{k}")
    object.__setattr__(fs, "members", tuple(f"x{j + 1}" for j in range(k)))
    return fs


def _provenance_string(config: FitConfig, n: int) -> str:
    if config.penalty is None:
        pen = "unpenalized"
    else:
        pen = f"{config.penalty.kind}, c={config.penalty.c:g}"
    return f"proximal-gradient fit ({pen}) on n={n}"


# ---------------------------------------------------------------------------
# inference

def adjusted_pseudo_r2(ll_model: float, ll_null: float, k: int) -> float:
    """Adjusted McFadden measure 1 - (ll_model - k) / ll_null."""
    if ll_null == 0.0:
        raise MetricUndefined("null log-likelihood is zero")
    if ll_null > 0 or ll_model < ll_null - 1e-9:
        raise DataError("expected ll_null <= 0 and ll_model >= ll_null")
    return 1.0 - (ll_model - k) / ll_null


class MetricUndefined(InferenceError):
    pass


def wald_inference(model: FittedModel, X, y) -> InferenceReport:
    """Standard errors from the inverse observed information at the fitted
    point, z = beta/SE, two-sided normal p-values.

    Meant for unpenalized (or weakly l2-penalized) fits; penalized estimates
    bias the p-values.
    """
    y = _check_labels(y)
    X = np.asarray(X, dtype=float)
    n = len(y)
    Xd = np.hstack([np.ones((n, 1)), X])
    beta = model.beta
    p = expit(Xd @ beta)
    wdiag = p * (1.0 - p)
    info = Xd.T @ (Xd * wdiag[:, None])
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as e:
        raise InferenceError(
            "singular information matrix (collinear features?)"
        ) from e
    var = np.diag(cov)
    if np.any(var <= 0) or not np.isfinite(var).all():
        raise InferenceError("information matrix not positive definite")
    se = np.sqrt(var)
    z = beta / se
    pvals = np.array([math.erfc(abs(zi) / math.sqrt(2.0)) for zi in z])

    nll, _ = negative_log_likelihood(beta, X, y)
    ll_model = -nll
    ll_null = _null_log_likelihood(y)
    k = X.shape[1]
    return InferenceReport(
        terms=("intercept",) + tuple(model.feature_set.members),
        coefficients=tuple(float(b) for b in beta),
        std_errors=tuple(float(v) for v in se),
        z_values=tuple(float(v) for v in z),
        p_values=tuple(float(v) for v in pvals),
        ll_model=ll_model,
        ll_null=ll_null,
        pseudo_r2=1.0 - ll_model / ll_null,
        adjusted_pseudo_r2=adjusted_pseudo_r2(ll_model, ll_null, k),
    )


# ---------------------------------------------------------------------------
# stepwise selection

def stepwise_select(biomarkers, y, config: FitConfig | None = None):
    """Forward selection of interaction terms on top of the three main
    effects, guided by adjusted pseudo-R².

    biomarkers: (n, 3) matrix with columns (ldh, lymphocyte, hs_crp).
    Returns (FeatureSet, trail, final InferenceReport); trail is one dict per
    step with every candidate's adjusted pseudo-R².
    """
    B = np.asarray(biomarkers, dtype=float)
    if B.ndim != 2 or B.shape[1] != 3:
        raise ShapeError("biomarkers must be (n, 3): ldh, lymphocyte, hs_crp")
    y = _check_labels(y)
    if config is None:
        config = FitConfig(penalty=None, tolerance=1e-7)

    cols = {name: B[:, i] for i, name in enumerate(MAIN_EFFECTS)}
    for name, (a, b) in INTERACTIONS.items():
        cols[name] = cols[a] * cols[b]
    ordering = list(MAIN_EFFECTS) + list(INTERACTIONS)

    def adj_r2_for(members):
        X = np.column_stack([cols[m] for m in members])
        res = fit(X, y, config)
        rep = wald_inference(res.model, X, y)
        return rep.adjusted_pseudo_r2, rep

    selected = list(MAIN_EFFECTS)
    best_adj, _ = adj_r2_for(selected)
    remaining = list(INTERACTIONS)
    trail = [{"step": 0, "added": None, "members": tuple(selected),
              "adjusted_pseudo_r2": best_adj}]

    step = 0
    while remaining:
        step += 1
        scored = {}
        for cand in remaining:
            members = sorted(selected + [cand], key=ordering.index)
            scored[cand], _ = adj_r2_for(members)
        winner = max(scored, key=scored.get)
        if scored[winner] <= best_adj:
            trail.append({"step": step, "added": None, "candidates": scored,
                          "adjusted_pseudo_r2": best_adj})
            break
        selected = sorted(selected + [winner], key=ordering.index)
        best_adj = scored[winner]
        remaining.remove(winner)
        trail.append({"step": step, "added": winner, "candidates": scored,
                      "members": tuple(selected),
                      "adjusted_pseudo_r2": best_adj})

    fs = feature_set_for_members(selected)
    X = np.column_stack([cols[m] for m in selected])
    final = fit(X, y, config)
    report = wald_inference(
        replace_feature_set(final.model, fs), X, y)
    return fs, trail, report


def replace_feature_set(model: FittedModel, fs: FeatureSet) -> FittedModel:
    return FittedModel(
        feature_set=fs,
        coefficients=model.coefficients,
        threshold=model.threshold,
        provenance=model.provenance,
    )


# ---------------------------------------------------------------------------
# persistence

def model_to_json(model: FittedModel) -> str:
    """Byte-stable JSON document (fixed field order, full-precision floats)."""
    doc = {
        "feature_set": model.feature_set.identifier,
        "members": list(model.feature_set.members),
        "coefficients": [float(b) for b in model.coefficients],
        "threshold": float(model.threshold),
        "provenance": model.provenance,
        "toolkit_version": __version__,
    }
    return json.dumps(doc, indent=2) + "\n"


def save_model(model: FittedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(model_to_json(model))


def load_model(path) -> FittedModel:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    fs = feature_set_for_members(doc["members"])
    if doc.get("feature_set") and not doc["feature_set"].startswith("custom:"):
        expected = feature_set_by_id(doc["feature_set"])
        if expected.members != fs.members:
            raise ShapeError("feature_set id does not match member list")
        fs = expected
    return FittedModel(
        feature_set=fs,
        coefficients=tuple(doc["coefficients"]),
        threshold=doc["threshold"],
        provenance=doc.get("provenance", ""),
    )
