"""Cohort ingestion, completeness filtering, daily aggregation, and the
synthetic cohort generator.

CSV schema (UTF-8, header row):
    patient_id,recorded_at,ldh,lymphocyte_pct,hs_crp,outcome,outcome_date
recorded_at is ISO-8601 date-time, outcome_date ISO date, outcome is 0/1,
and a missing biomarker is an empty field (never a sentinel number).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

import numpy as np
from scipy.special import expit, logit

from .errors import IngestionError, ParameterError, SchemaError

CSV_COLUMNS = (
    "patient_id", "recorded_at", "ldh", "lymphocyte_pct", "hs_crp",
    "outcome", "outcome_date",
)


@dataclass(frozen=True)
class BiomarkerRecord:
    """One timestamped measurement triple; absent values are None."""

    patient_id: str
    recorded_at: datetime
    ldh: float | None = None
    lymphocyte_pct: float | None = None
    hs_crp: float | None = None

    def __post_init__(self):
        for name in ("ldh", "hs_crp"):
            v = getattr(self, name)
            if v is not None and (not math.isfinite(v) or v < 0):
                raise IngestionError(f"{name} must be finite and >= 0, got {v}")
        v = self.lymphocyte_pct
        if v is not None and not (0.0 <= v <= 100.0):
            raise IngestionError(f"lymphocyte_pct must lie in [0, 100], got {v}")

    @property
    def is_complete(self) -> bool:
        return (self.ldh is not None and self.lymphocyte_pct is not None
                and self.hs_crp is not None)


@dataclass(frozen=True)
class PatientTimeline:
    """One patient's chronologically ordered records plus final outcome."""

    patient_id: str
    daily_records: tuple[BiomarkerRecord, ...]
    outcome: int  # 1 = death, 0 = survival
    outcome_date: date

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise IngestionError(
                f"outcome must be 0 or 1, got {self.outcome!r} "
                f"(patient {self.patient_id})")
        for r in self.daily_records:
            if r.patient_id != self.patient_id:
                raise IngestionError("record patient_id mismatch")
        stamps = [r.recorded_at for r in self.daily_records]
        if stamps != sorted(stamps):
            raise IngestionError(
                f"records not chronologically ordered (patient {self.patient_id})")

    @property
    def final_record(self) -> BiomarkerRecord | None:
        return self.daily_records[-1] if self.daily_records else None


@dataclass(frozen=True)
class CohortDataset:
    patients: tuple[PatientTimeline, ...]
    label: str = "cohort"

    def __post_init__(self):
        ids = [p.patient_id for p in self.patients]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise IngestionError(f"duplicate patient ids in cohort: {dupes}")

    def __len__(self):
        return len(self.patients)

    def __iter__(self):
        return iter(self.patients)

    @property
    def death_count(self) -> int:
        return sum(p.outcome for p in self.patients)


@dataclass(frozen=True)
class Exclusion:
    patient_id: str
    reason: str
    detail: str


@dataclass
class ExclusionReport:
    entries: list[Exclusion] = field(default_factory=list)

    def add(self, patient_id, reason, detail=""):
        self.entries.append(Exclusion(patient_id, reason, detail))

    def __len__(self):
        return len(self.entries)

    def patients(self) -> set[str]:
        return {e.patient_id for e in self.entries}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["patient_id", "reason", "detail"])
            for e in self.entries:
                w.writerow([e.patient_id, e.reason, e.detail])


# ---------------------------------------------------------------------------
# ingestion

def _parse_float(text, column, row_no, problems):
    text = text.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        problems.append(f"row {row_no}: unparseable {column} {text!r}")
        return None


def load_cohort(path, schema: dict | None = None, label: str | None = None) -> CohortDataset:
    """Read a cohort CSV into one PatientTimeline per patient.

    schema maps canonical column names to the file's actual headers.
    Unparseable fields, duplicate (patient, datetime) rows, and patients
    without an outcome are reported as errors, never silently dropped.
    """
    schema = schema or {}
    colmap = {c: schema.get(c, c) for c in CSV_COLUMNS}

    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for canonical, actual in colmap.items():
            if actual not in header:
                raise SchemaError(f"missing required column: {actual!r}")

        problems: list[str] = []
        seen: set[tuple[str, str]] = set()
        duplicates: list[str] = []
        by_patient: dict[str, dict] = {}

        for row_no, row in enumerate(reader, start=2):
            pid = (row[colmap["patient_id"]] or "").strip()
            if not pid:
                problems.append(f"row {row_no}: empty patient_id")
                continue
            ts_text = (row[colmap["recorded_at"]] or "").strip()
            try:
                ts = datetime.fromisoformat(ts_text)
            except ValueError:
                problems.append(f"row {row_no}: unparseable recorded_at {ts_text!r}")
                continue
            key = (pid, ts_text)
            if key in seen:
                duplicates.append(f"({pid}, {ts_text})")
                continue
            seen.add(key)

            outcome_text = (row[colmap["outcome"]] or "").strip()
            odate_text = (row[colmap["outcome_date"]] or "").strip()
            if outcome_text == "":
                problems.append(f"patient {pid}: no outcome value (row {row_no})")
                continue
            if outcome_text not in ("0", "1"):
                problems.append(
                    f"row {row_no}: outcome must be 0 or 1, got {outcome_text!r}")
                continue
            outcome = int(outcome_text)
            try:
                odate = date.fromisoformat(odate_text)
            except ValueError:
                problems.append(
                    f"row {row_no}: unparseable outcome_date {odate_text!r}")
                continue

            record = BiomarkerRecord(
                patient_id=pid,
                recorded_at=ts,
                ldh=_parse_float(row[colmap["ldh"]], "ldh", row_no, problems),
                lymphocyte_pct=_parse_float(
                    row[colmap["lymphocyte_pct"]], "lymphocyte_pct", row_no, problems),
                hs_crp=_parse_float(row[colmap["hs_crp"]], "hs_crp", row_no, problems),
            )
            entry = by_patient.setdefault(
                pid, {"records": [], "outcome": outcome, "outcome_date": odate})
            if entry["outcome"] != outcome or entry["outcome_date"] != odate:
                problems.append(f"patient {pid}: conflicting outcome rows")
                continue
            entry["records"].append(record)

    if duplicates:
        raise IngestionError(
            "duplicate (patient, datetime) rows: " + ", ".join(duplicates))
    if problems:
        raise IngestionError("; ".join(problems))

    patients = tuple(
        PatientTimeline(
            patient_id=pid,
            daily_records=tuple(sorted(e["records"], key=lambda r: r.recorded_at)),
            outcome=e["outcome"],
            outcome_date=e["outcome_date"],
        )
        for pid, e in by_patient.items()
    )
    if label is None:
        import os
        label = os.path.splitext(os.path.basename(str(path)))[0]
    return CohortDataset(patients=patients, label=label)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def save_cohort(cohort: CohortDataset, path) -> None:
    """Write the canonical CSV; round-trips through load_cohort."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for patient in cohort:
            for r in patient.daily_records:
                w.writerow([
                    patient.patient_id,
                    r.recorded_at.isoformat(),
                    _fmt(r.ldh), _fmt(r.lymphocyte_pct), _fmt(r.hs_crp),
                    patient.outcome,
                    patient.outcome_date.isoformat(),
                ])


# ---------------------------------------------------------------------------
# completeness and aggregation

def filter_complete_cases(cohort: CohortDataset, mode: str = "per_patient"):
    """Drop missing-data patients (per_patient) or just incomplete records
    (per_record). Returns (filtered cohort, ExclusionReport)."""
    if mode not in ("per_patient", "per_record"):
        raise ParameterError(f"unknown mode: {mode!r}")
    report = ExclusionReport()
    kept: list[PatientTimeline] = []
    for patient in cohort:
        complete = [r for r in patient.daily_records if r.is_complete]
        if mode == "per_patient":
            if complete:
                kept.append(patient)
            else:
                report.add(patient.patient_id, "no_complete_record",
                           f"{len(patient.daily_records)} records, none complete")
        else:
            for r in patient.daily_records:
                if not r.is_complete:
                    report.add(patient.patient_id, "incomplete_record",
                               r.recorded_at.isoformat())
            if complete:
                kept.append(PatientTimeline(
                    patient_id=patient.patient_id,
                    daily_records=tuple(complete),
                    outcome=patient.outcome,
                    outcome_date=patient.outcome_date,
                ))
            else:
                report.add(patient.patient_id, "no_complete_record",
                           "all records incomplete")
    return CohortDataset(tuple(kept), cohort.label), report


def aggregate_daily(timeline: PatientTimeline) -> PatientTimeline:
    """Collapse to at most one record per calendar day.

    When a day has several complete records the latest-timestamped one is
    kept (freshest measurement); days with only incomplete records
    contribute nothing. Idempotent.
    """
    by_day: dict[date, BiomarkerRecord] = {}
    for r in timeline.daily_records:
        if not r.is_complete:
            continue
        day = r.recorded_at.date()
        cur = by_day.get(day)
        if cur is None or r.recorded_at >= cur.recorded_at:
            by_day[day] = r
    records = tuple(by_day[d] for d in sorted(by_day))
    return PatientTimeline(
        patient_id=timeline.patient_id,
        daily_records=records,
        outcome=timeline.outcome,
        outcome_date=timeline.outcome_date,
    )


def aggregate_daily_cohort(cohort: CohortDataset):
    """aggregate_daily over every patient, reporting what was collapsed."""
    report = ExclusionReport()
    patients = []
    for patient in cohort:
        agg = aggregate_daily(patient)
        removed = len(patient.daily_records) - len(agg.daily_records)
        if removed:
            report.add(patient.patient_id, "daily_aggregation",
                       f"{removed} records collapsed (latest complete per day kept)")
        patients.append(agg)
    return CohortDataset(tuple(patients), cohort.label), report


# ---------------------------------------------------------------------------
# synthetic cohorts

@dataclass(frozen=True)
class SyntheticCohortSpec:
    """Desk-scale stand-in for the non-redistributable clinical cohorts.

    death_rate is the high-risk branch fraction; realized death counts are
    slightly higher because outcomes are Bernoulli draws from each patient's
    reference-model probability, and low-risk patients carry small but
    nonzero risk. The defaults target the reference cohort's density of
    roughly 1.9 daily records per patient.
    """

    n_patients: int
    death_rate: float = 0.35
    mean_records_per_patient: float = 1.875
    noise_scale: float = 0.05
    seed: int = 0
    label: str = "synthetic"
    start_date: date = date(2020, 1, 15)
    forced_probability: float | None = None  # override branch sampling (tests)

    def __post_init__(self):
        if self.n_patients <= 0:
            raise ParameterError("n_patients must be positive")
        if not (0.0 < self.death_rate < 1.0):
            raise ParameterError("death_rate must lie in (0, 1)")
        if self.mean_records_per_patient < 1.0:
            raise ParameterError("mean_records_per_patient must be >= 1")
        if self.noise_scale < 0.0:
            raise ParameterError("noise_scale must be >= 0")
        if self.forced_probability is not None and not (
                0.0 < self.forced_probability < 1.0):
            raise ParameterError("forced_probability must lie in (0, 1)")


# lymphocyte and hs-CRP are sampled identically for both risk branches, so
# their product carries no marginal outcome signal of its own; all risk
# separation flows through LDH, which is solved so the reference model's
# probability hits the sampled target
_LOW_RISK_P = (1e-3, 0.30)     # log-uniform
_HIGH_RISK_P = (0.82, 0.995)   # uniform; nothing lands in (0.30, 0.82), which
                               # pins threshold tuning to the 0.8 boundary
_LYM_RANGE = (2.0, 45.0)
_CRP_RANGE = (0.0, 180.0)
_LDH_RANGE = (10.0, 2000.0)


def _reference_beta() -> np.ndarray:
    from .glm import PUBLISHED_COEFFICIENTS
    return np.asarray(PUBLISHED_COEFFICIENTS)


def generate_synthetic_cohort(spec: SyntheticCohortSpec) -> CohortDataset:
    """Deterministic synthetic cohort whose outcomes are sampled from the
    reference model's probability at each patient's final record.

    Earlier records are perturbed copies of the final one, drifting toward
    it as the outcome approaches; only the final record's probability is
    tied to the outcome draw.
    """
    b = _reference_beta()
    rng = np.random.default_rng(spec.seed)
    patients = []
    for i in range(spec.n_patients):
        pid = f"SYN{i:05d}"
        high_risk = rng.random() < spec.death_rate
        if high_risk:
            target_p = rng.uniform(*_HIGH_RISK_P)
        else:
            lo, hi = _LOW_RISK_P
            target_p = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        if spec.forced_probability is not None:
            target_p = spec.forced_probability
        # resample (lymphocyte, hs-CRP) until the solved LDH is plausible,
        # so the realized probability equals the target exactly
        for _ in range(200):
            lym = rng.uniform(*_LYM_RANGE)
            crp = rng.uniform(*_CRP_RANGE)
            denom = b[1] + b[4] * lym + b[5] * crp
            if denom <= 1e-4:
                continue
            ldh = (logit(target_p) - b[0] - b[2] * lym - b[3] * crp) / denom
            if _LDH_RANGE[0] <= ldh <= _LDH_RANGE[1]:
                break
        ldh = float(np.clip(ldh, *_LDH_RANGE))
        p = float(expit(b[0] + b[1] * ldh + b[2] * lym + b[3] * crp
                        + b[4] * ldh * lym + b[5] * ldh * crp))
        outcome = int(rng.random() < p)

        n_records = 1 + int(rng.poisson(spec.mean_records_per_patient - 1.0))
        admit_offset = int(rng.integers(0, 30))
        final_day = spec.start_date + timedelta(days=admit_offset + n_records - 1)
        outcome_date = final_day + timedelta(days=int(rng.integers(1, 5)))

        records = []
        for j in range(n_records):
            back = n_records - 1 - j  # days before the final record
            day = final_day - timedelta(days=back)
            stamp = datetime.combine(
                day, time(int(rng.integers(7, 20)), int(rng.integers(0, 60))))
            drift = spec.noise_scale * back
            vals = {
                "ldh": ldh * (1.0 + drift * rng.normal()),
                "lymphocyte_pct": lym * (1.0 + drift * rng.normal()),
                "hs_crp": crp * (1.0 + drift * rng.normal()),
            }
            if back == 0:  # final record carries the exact solved values
                vals = {"ldh": ldh, "lymphocyte_pct": lym, "hs_crp": crp}
            records.append(BiomarkerRecord(
                patient_id=pid,
                recorded_at=stamp,
                ldh=max(0.0, vals["ldh"]),
                lymphocyte_pct=float(np.clip(vals["lymphocyte_pct"], 0.0, 100.0)),
                hs_crp=max(0.0, vals["hs_crp"]),
            ))
        patients.append(PatientTimeline(
            patient_id=pid,
            daily_records=tuple(records),
            outcome=outcome,
            outcome_date=outcome_date,
        ))
    return CohortDataset(tuple(patients), spec.label)


# ---------------------------------------------------------------------------
# training matrices

def final_record_matrix(cohort: CohortDataset, feature_set):
    """One sample per patient from the final complete daily record.

    Returns (X, y, patient_ids); patients without a complete record are
    skipped (run filter_complete_cases first to account for them).
    """
    from .features import expand_record
    rows, labels, ids = [], [], []
    for patient in cohort:
        complete = [r for r in patient.daily_records if r.is_complete]
        if not complete:
            continue
        rows.append(expand_record(complete[-1], feature_set))
        labels.append(patient.outcome)
        ids.append(patient.patient_id)
    X = np.vstack(rows) if rows else np.empty((0, feature_set.arity))
    return X, np.array(labels, dtype=int), ids
