from datetime import date, datetime

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prognosis.data_model import (
    BiomarkerRecord,
    CohortDataset,
    PatientTimeline,
)
from prognosis.errors import ParameterError
from prognosis.forecast import (
    DailySample,
    build_daily_samples,
    cohort_forecasts,
    consistent_suffix,
    days_ahead_summary,
    days_to_outcome,
    histogram_bins,
    histogram_csv,
    horizon_metrics,
    patient_forecast,
)
from prognosis.glm import published_model


def sample(pid, day, predicted, outcome, days, score=0.9):
    return DailySample(patient_id=pid,
                       recorded_at=datetime(2020, 1, day, 8),
                       score=score, predicted=predicted,
                       true_outcome=outcome, days_to_outcome=days)


# ---------------------------------------------------------------------------
# day arithmetic

def test_days_to_outcome_midnight_convention():
    # record on day 3, outcome dated day 10: seven full days ahead
    assert days_to_outcome(date(2020, 1, 10), datetime(2020, 1, 3)) == 7.0
    # an 08:00 record is a third of a day closer
    assert days_to_outcome(date(2020, 1, 10), datetime(2020, 1, 3, 8)) == (
        pytest.approx(7.0 - 8.0 / 24.0))
    # records after the outcome date come out negative
    assert days_to_outcome(date(2020, 1, 10), datetime(2020, 1, 11, 1)) < 0


# ---------------------------------------------------------------------------
# consistent suffix

def test_suffix_traced_example():
    # wrong, correct, correct -> suffix length 2 starting at index 1
    assert consistent_suffix([0, 1, 1], 1) == (2, 1)


def test_suffix_zero_when_last_prediction_wrong():
    assert consistent_suffix([1, 1, 0], 1) == (0, None)


def test_suffix_all_correct():
    assert consistent_suffix([1, 1, 1, 1], 1) == (4, 0)


def test_suffix_empty():
    assert consistent_suffix([], 0) == (0, None)


@given(st.lists(st.integers(0, 1), max_size=30), st.integers(0, 1))
def test_suffix_properties(preds, outcome):
    n, start = consistent_suffix(preds, outcome)
    assert 0 <= n <= len(preds)
    if n == 0:
        assert start is None
        assert not preds or preds[-1] != outcome
    else:
        assert start == len(preds) - n
        assert all(p == outcome for p in preds[start:])
        assert start == 0 or preds[start - 1] != outcome


# ---------------------------------------------------------------------------
# per-patient forecasts

def test_patient_forecast_traced_example():
    # outcome (death) dated day 10; records on days 1 (wrong), 3 and 7
    samples = [
        sample("P", 1, predicted=0, outcome=1, days=9.0),
        sample("P", 3, predicted=1, outcome=1, days=7.0),
        sample("P", 7, predicted=1, outcome=1, days=3.0),
    ]
    f = patient_forecast(samples)
    assert f.n_records == 3
    assert f.n_consistent == 2
    assert f.days_ahead == 7.0
    assert f.max_possible_days == 9.0


def test_patient_forecast_inconsistent_final_day():
    samples = [
        sample("P", 1, predicted=1, outcome=1, days=5.0),
        sample("P", 2, predicted=0, outcome=1, days=4.0),
    ]
    f = patient_forecast(samples)
    assert f.n_consistent == 0
    assert f.days_ahead is None
    assert f.max_possible_days == 5.0


def test_patient_forecast_requires_samples():
    with pytest.raises(ParameterError):
        patient_forecast([])


def test_cohort_forecasts_groups_and_sorts():
    # interleaved patients, out of order: grouping must sort by timestamp
    samples = [
        sample("B", 5, 1, 1, 1.0),
        sample("A", 2, 0, 0, 3.0),
        sample("B", 3, 0, 1, 3.0),
        sample("A", 1, 1, 0, 4.0),
    ]
    by_id = {f.patient_id: f for f in cohort_forecasts(samples)}
    assert by_id["B"].n_consistent == 1
    assert by_id["B"].days_ahead == 1.0
    assert by_id["A"].n_consistent == 1  # final record predicts 0 == outcome
    assert by_id["A"].days_ahead == 3.0
    assert by_id["A"].max_possible_days == 4.0


def test_days_ahead_summary():
    forecasts = cohort_forecasts([
        sample("A", 1, 1, 1, 6.0),
        sample("B", 1, 0, 1, 2.0),
        sample("C", 1, 0, 0, 4.0),
    ])
    s = days_ahead_summary(forecasts)
    assert s["patients"] == 3
    assert s["correctly_forecast"] == 2
    assert s["mean_days_ahead"] == pytest.approx(5.0)
    assert s["max_days_ahead"] == 6.0


def test_days_ahead_invariants(small_cohort):
    model = published_model()
    samples, _ = build_daily_samples(small_cohort, model)
    for f in cohort_forecasts(samples):
        assert 0 <= f.n_consistent <= f.n_records
        if f.days_ahead is not None:
            assert f.days_ahead <= f.max_possible_days


# ---------------------------------------------------------------------------
# sample construction

def test_build_daily_samples_excludes_negative_days():
    model = published_model()
    records = tuple(
        BiomarkerRecord("P1", datetime(2020, 1, d, 8),
                        ldh=600.0, lymphocyte_pct=5.0, hs_crp=100.0)
        for d in (3, 5, 12))  # day 12 falls after the outcome date
    cohort = CohortDataset((PatientTimeline(
        patient_id="P1", daily_records=records, outcome=1,
        outcome_date=date(2020, 1, 10)),))
    samples, excluded = build_daily_samples(cohort, model)
    assert len(samples) == 2
    assert len(excluded) == 1
    assert excluded[0].recorded_at.day == 12
    assert all(s.days_to_outcome >= 0 for s in samples)
    assert all(s.predicted == 1 for s in samples)  # high-risk triple


def test_build_daily_samples_skips_incomplete():
    model = published_model()
    records = (
        BiomarkerRecord("P1", datetime(2020, 1, 3, 8), ldh=600.0,
                        lymphocyte_pct=None, hs_crp=100.0),
        BiomarkerRecord("P1", datetime(2020, 1, 4, 8), ldh=600.0,
                        lymphocyte_pct=5.0, hs_crp=100.0),
    )
    cohort = CohortDataset((PatientTimeline(
        patient_id="P1", daily_records=records, outcome=1,
        outcome_date=date(2020, 1, 10)),))
    samples, excluded = build_daily_samples(cohort, model)
    assert len(samples) == 1 and not excluded


# ---------------------------------------------------------------------------
# horizon metrics

def test_horizon_all_correct():
    samples = [sample("A", 1, 1, 1, 0.5), sample("B", 1, 1, 1, 1.5),
               sample("C", 1, 0, 0, 1.6)]
    report = horizon_metrics(samples)
    assert [row["day"] for row in report.per_day] == [0, 1]
    assert all(row["accuracy"] == 1.0 for row in report.per_day)
    assert report.overall_accuracy == 1.0
    assert report.overall_f1 == 1.0


def test_horizon_cumulative_example():
    # day 1: one correct death; day 5: one wrong survival call on a death
    samples = [sample("A", 1, 1, 1, 1.2), sample("B", 1, 0, 1, 5.4)]
    report = horizon_metrics(samples)
    rows = {row["day"]: row for row in report.per_day}
    assert rows[1]["cum_accuracy"] == 1.0
    assert rows[5]["accuracy"] == 0.0
    assert rows[5]["cum_accuracy"] == 0.5
    assert rows[5]["cum_f1"] == pytest.approx(2 / 3)


def test_horizon_bucket_counts_partition_samples(small_cohort):
    model = published_model()
    samples, excluded = build_daily_samples(small_cohort, model)
    report = horizon_metrics(samples, excluded_count=len(excluded))
    assert sum(row["n"] for row in report.per_day) == len(samples)
    assert report.excluded_negative_days == len(excluded)
    # cumulative metrics at the farthest horizon equal the whole-set metrics
    correct = sum(1 for s in samples if s.correct)
    assert report.overall_accuracy == pytest.approx(correct / len(samples))


def test_horizon_per_day_f1_none_when_undefined():
    # a day with only true-negative survivors has no defined f1
    samples = [sample("A", 1, 0, 0, 2.5)]
    report = horizon_metrics(samples)
    assert report.per_day[0]["f1"] is None
    assert report.per_day[0]["accuracy"] == 1.0


def test_horizon_csv_shape():
    samples = [sample("A", 1, 1, 1, 1.2), sample("B", 1, 0, 0, 2.4)]
    text = horizon_metrics(samples).to_csv()
    lines = text.splitlines()
    assert lines[0] == "horizon_day,n,f1,accuracy,cum_f1,cum_accuracy"
    assert len(lines) == 3


def test_horizon_empty():
    report = horizon_metrics([], excluded_count=3)
    assert report.per_day == []
    assert report.excluded_negative_days == 3
    assert report.overall_accuracy is None


# ---------------------------------------------------------------------------
# histograms

def test_histogram_traced_example():
    bins = histogram_bins([0.5, 1.5, 1.7], 1.0)
    assert bins == [(0.0, 1.0, 1), (1.0, 2.0, 2)]


def test_histogram_empty_and_none_values():
    assert histogram_bins([], 1.0) == []
    assert histogram_bins([None, None], 1.0) == []


def test_histogram_boundary_is_right_open():
    bins = histogram_bins([1.0, 2.0], 1.0)
    assert bins == [(0.0, 1.0, 0), (1.0, 2.0, 1), (2.0, 3.0, 1)]


def test_histogram_counts_match_numpy(small_cohort):
    model = published_model()
    samples, _ = build_daily_samples(small_cohort, model)
    values = [f.days_ahead for f in cohort_forecasts(samples)
              if f.days_ahead is not None]
    bins = histogram_bins(values, 1.0)
    assert sum(c for _, _, c in bins) == len(values)
    edges = np.arange(0.0, max(values) // 1 + 2)
    expected, _ = np.histogram(values, bins=edges)
    # numpy closes the last bin on the right; no value sits exactly there
    assert [c for _, _, c in bins] == expected.tolist()


def test_histogram_width_validation():
    with pytest.raises(ParameterError):
        histogram_bins([1.0], 0.0)


def test_histogram_csv_format():
    text = histogram_csv([(0.0, 1.0, 2), (1.0, 2.0, 0)])
    assert text == "bin_start,bin_end,count\n0.0,1.0,2\n1.0,2.0,0\n"
