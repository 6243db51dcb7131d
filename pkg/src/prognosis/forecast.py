"""Multi-day-ahead forecasting evaluation: daily samples scored by a model,
maximal consistent suffixes, days-ahead statistics, per-day and cumulative
metrics, and histogram data.

Days-to-outcome is real-valued: outcome_date at midnight minus the record's
full timestamp, in days. Records dated at/after the outcome moment come out
negative and are excluded from every statistic, but counted in the census.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import ParameterError
from .glm import FittedModel, probability
from .features import expand_record

DAY_SECONDS = 86400.0


@dataclass(frozen=True)
class DailySample:
    patient_id: str
    recorded_at: datetime
    score: float  # model probability of death
    predicted: int
    true_outcome: int
    days_to_outcome: float

    @property
    def correct(self) -> bool:
        return self.predicted == self.true_outcome


@dataclass(frozen=True)
class PatientForecast:
    patient_id: str
    n_records: int
    n_consistent: int
    days_ahead: float | None       # m: from the suffix's earliest record
    max_possible_days: float | None  # M: from the first record


@dataclass
class HorizonReport:
    per_day: list[dict] = field(default_factory=list)
    excluded_negative_days: int = 0
    overall_accuracy: float | None = None
    overall_f1: float | None = None

    def to_csv(self) -> str:
        lines = ["horizon_day,n,f1,accuracy,cum_f1,cum_accuracy"]
        for row in self.per_day:
            lines.append(",".join([
                str(row["day"]), str(row["n"]),
                _csvnum(row["f1"]), _csvnum(row["accuracy"]),
                _csvnum(row["cum_f1"]), _csvnum(row["cum_accuracy"]),
            ]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "per_day": self.per_day,
            "excluded_negative_days": self.excluded_negative_days,
            "overall_accuracy": self.overall_accuracy,
            "overall_f1": self.overall_f1,
        }, indent=2) + "\n"


def _csvnum(v) -> str:
    return "" if v is None else repr(v)


# ---------------------------------------------------------------------------
# samples

def days_to_outcome(outcome_date, recorded_at: datetime) -> float:
    moment = datetime.combine(outcome_date, datetime.min.time())
    return (moment - recorded_at).total_seconds() / DAY_SECONDS


def build_daily_samples(cohort, model: FittedModel):
    """Score every daily record of the cohort and split into (samples,
    excluded) where excluded holds the negative days-to-outcome records.

    The cohort is expected to be daily-aggregated and complete-case
    filtered; incomplete records are skipped.
    """
    samples, excluded = [], []
    for patient in cohort:
        for r in patient.daily_records:
            if not r.is_complete:
                continue
            p = float(probability(model, expand_record(r, model.feature_set)))
            sample = DailySample(
                patient_id=patient.patient_id,
                recorded_at=r.recorded_at,
                score=p,
                predicted=int(p > model.threshold),
                true_outcome=patient.outcome,
                days_to_outcome=days_to_outcome(patient.outcome_date, r.recorded_at),
            )
            (samples if sample.days_to_outcome >= 0 else excluded).append(sample)
    return samples, excluded


# ---------------------------------------------------------------------------
# per-patient forecasting

def consistent_suffix(predictions, true_outcome: int):
    """Length of the longest trailing run of predictions equal to the true
    outcome, plus the index where that suffix starts (None when empty)."""
    preds = list(predictions)
    n = 0
    for p in reversed(preds):
        if p != true_outcome:
            break
        n += 1
    if n == 0:
        return 0, None
    return n, len(preds) - n


def patient_forecast(samples: list[DailySample]) -> PatientForecast:
    """Forecast summary for one patient's chronologically ordered,
    nonnegative-day samples."""
    if not samples:
        raise ParameterError("patient has no scored samples")
    pid = samples[0].patient_id
    preds = [s.predicted for s in samples]
    n_i, start = consistent_suffix(preds, samples[0].true_outcome)
    M = samples[0].days_to_outcome
    if n_i == 0:
        return PatientForecast(pid, len(samples), 0, None, M)
    m = samples[start].days_to_outcome
    return PatientForecast(pid, len(samples), n_i, m, M)


def cohort_forecasts(samples: list[DailySample]) -> list[PatientForecast]:
    by_patient: dict[str, list[DailySample]] = {}
    for s in samples:
        by_patient.setdefault(s.patient_id, []).append(s)
    out = []
    for pid, group in by_patient.items():
        group.sort(key=lambda s: s.recorded_at)
        out.append(patient_forecast(group))
    return out


def days_ahead_summary(forecasts: list[PatientForecast]) -> dict:
    vals = [f.days_ahead for f in forecasts if f.n_consistent >= 1]
    return {
        "patients": len(forecasts),
        "correctly_forecast": len(vals),
        "mean_days_ahead": float(np.mean(vals)) if vals else None,
        "max_days_ahead": float(np.max(vals)) if vals else None,
    }


# ---------------------------------------------------------------------------
# horizon metrics

def _f1_or_none(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return None if denom == 0 else 2 * tp / denom


def horizon_metrics(samples: list[DailySample],
                    excluded_count: int = 0) -> HorizonReport:
    """Per-day buckets keyed by floor(days_to_outcome) with f1/accuracy, and
    cumulative metrics at each horizon over all samples at that day or
    nearer. The cumulative values at the largest horizon equal the whole-set
    metrics."""
    report = HorizonReport(excluded_negative_days=excluded_count)
    if not samples:
        return report
    buckets: dict[int, list[DailySample]] = {}
    for s in samples:
        buckets.setdefault(int(math.floor(s.days_to_outcome)), []).append(s)

    def counts(group):
        tp = sum(1 for s in group if s.predicted == 1 and s.true_outcome == 1)
        fp = sum(1 for s in group if s.predicted == 1 and s.true_outcome == 0)
        tn = sum(1 for s in group if s.predicted == 0 and s.true_outcome == 0)
        fn = sum(1 for s in group if s.predicted == 0 and s.true_outcome == 1)
        return tp, fp, tn, fn

    cum_tp = cum_fp = cum_tn = cum_fn = 0
    for day in sorted(buckets):
        group = buckets[day]
        tp, fp, tn, fn = counts(group)
        cum_tp += tp
        cum_fp += fp
        cum_tn += tn
        cum_fn += fn
        cum_n = cum_tp + cum_fp + cum_tn + cum_fn
        report.per_day.append({
            "day": day,
            "n": len(group),
            "f1": _f1_or_none(tp, fp, fn),
            "accuracy": (tp + tn) / len(group),
            "cum_f1": _f1_or_none(cum_tp, cum_fp, cum_fn),
            "cum_accuracy": (cum_tp + cum_tn) / cum_n,
        })
    report.overall_accuracy = report.per_day[-1]["cum_accuracy"]
    report.overall_f1 = report.per_day[-1]["cum_f1"]
    return report


def histogram_bins(values, width: float):
    """Right-open bins [k*width, (k+1)*width) from zero; returns a list of
    (start, end, count) covering the occupied range."""
    if not (width > 0):
        raise ParameterError("bin width must be positive")
    values = [v for v in values if v is not None]
    if not values:
        return []
    counts: dict[int, int] = {}
    for v in values:
        k = int(math.floor(v / width))
        counts[k] = counts.get(k, 0) + 1
    top = max(counts)
    return [(k * width, (k + 1) * width, counts.get(k, 0))
            for k in range(0, top + 1)]


def histogram_csv(bins) -> str:
    lines = ["bin_start,bin_end,count"]
    for start, end, count in bins:
        lines.append(f"{start!r},{end!r},{count}")
    return "\n".join(lines) + "\n"
