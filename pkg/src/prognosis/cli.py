"""Command-line entry points.

Every subcommand delegates its arithmetic to the library modules and writes
a run manifest (config echo + seed + version) next to its artifacts, so a
run can be reproduced from the manifest alone. Partial outputs are removed
when a command fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .data_model import (
    SyntheticCohortSpec,
    aggregate_daily_cohort,
    filter_complete_cases,
    final_record_matrix,
    generate_synthetic_cohort,
    load_cohort,
    save_cohort,
)
from .errors import ParameterError, PrognosisError
from .features import feature_set_by_id
from .forecast import (
    build_daily_samples,
    cohort_forecasts,
    days_ahead_summary,
    histogram_bins,
    histogram_csv,
    horizon_metrics,
)
from .glm import (
    FitConfig,
    FittedModel,
    PenaltySpec,
    fit,
    load_model,
    log_odds,
    probability,
    save_model,
    stepwise_select,
)
from .metrics import accuracy, confusion_at_threshold, f1_micro, f1_positive, roc_auc
from .selection import (
    CvPlan,
    aggregate_median_model,
    random_search_cv,
    table1_experiment,
    tune_threshold,
)


class _Run:
    """Tracks artifacts so they can be removed if the command fails."""

    def __init__(self):
        self.created: list[Path] = []

    def write_text(self, path, text):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.created.append(path)
        return path

    def register(self, path):
        self.created.append(Path(path))
        return Path(path)

    def cleanup(self):
        for p in self.created:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _manifest(run: _Run, args, out_path):
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "config") and not callable(v)}
    for k, v in config.items():
        if isinstance(v, Path):
            config[k] = str(v)
    doc = {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "toolkit_version": __version__,
    }
    run.write_text(out_path, json.dumps(doc, indent=2, default=str) + "\n")


def _load_clean_cohort(path, mode="per_patient"):
    cohort = load_cohort(path)
    cohort, _ = aggregate_daily_cohort(cohort)
    cohort, report = filter_complete_cases(cohort, mode)
    return cohort, report


def _fit_config(args) -> FitConfig:
    if args.penalty == "none":
        penalty = None
    else:
        penalty = PenaltySpec(args.penalty, args.c)
    return FitConfig(penalty=penalty, tolerance=args.tolerance,
                     max_iterations=args.max_iter)


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args, run):
    spec = SyntheticCohortSpec(
        n_patients=args.n,
        death_rate=args.death_rate,
        mean_records_per_patient=args.mean_records,
        noise_scale=args.noise_scale,
        seed=args.seed,
    )
    cohort = generate_synthetic_cohort(spec)
    run.register(args.out)
    save_cohort(cohort, args.out)
    _manifest(run, args, str(args.out) + ".manifest.json")
    print(f"wrote {args.out}: {len(cohort)} patients, "
          f"{cohort.death_count} deaths")


def cmd_ingest(args, run):
    out = Path(args.out_dir)
    cohort = load_cohort(args.data)
    cohort, agg_report = aggregate_daily_cohort(cohort)
    cohort, excl_report = filter_complete_cases(cohort, args.mode)
    run.register(out / "cleaned.csv")
    out.mkdir(parents=True, exist_ok=True)
    save_cohort(cohort, out / "cleaned.csv")
    run.register(out / "exclusions.csv")
    merged = agg_report
    merged.entries.extend(excl_report.entries)
    merged.write_csv(out / "exclusions.csv")
    _manifest(run, args, out / "manifest.json")
    print(f"retained {len(cohort)} patients ({cohort.death_count} deaths), "
          f"{len(excl_report)} exclusions")


def cmd_fit(args, run):
    cohort, _ = _load_clean_cohort(args.data)
    fs = feature_set_by_id(args.feature_set)
    X, y, _ = final_record_matrix(cohort, fs)
    res = fit(X, y, _fit_config(args), feature_set=fs)
    if not res.converged:
        print(f"warning: solver not converged after {res.iterations} "
              f"iterations (residual {res.residual:.3g})", file=sys.stderr)
    run.register(args.out)
    save_model(res.model, args.out)
    _manifest(run, args, str(args.out) + ".manifest.json")
    print(f"wrote {args.out} (converged={res.converged})")


def cmd_cv(args, run):
    cohort, _ = _load_clean_cohort(args.data)
    fs = feature_set_by_id(args.feature_set)
    X, y, _ = final_record_matrix(cohort, fs)
    plan = CvPlan(folds=args.folds, rounds=args.rounds, seed=args.seed)
    report = random_search_cv(X, y, plan, args.draws, feature_set=fs)
    out = Path(args.out_dir)
    run.write_text(out / "cv_report.json", report.to_json())
    model = aggregate_median_model(
        report.coefficient_vectors, fs,
        provenance=f"median of {len(report.cells)} cross-validation fits "
                   f"(seed {args.seed})")
    run.register(out / "median_model.json")
    save_model(model, out / "median_model.json")
    _manifest(run, args, out / "manifest.json")
    print(f"{len(report.cells)} coefficient sets; validation AUC "
          f"{report.val_auc_mean:.4f} ({report.val_auc_sd:.4f})")


def cmd_table1(args, run):
    cohort, _ = _load_clean_cohort(args.data)
    plan = CvPlan(folds=args.folds, rounds=args.rounds, seed=args.seed)
    table, reports = table1_experiment(cohort, plan, args.draws)
    out = Path(args.out_dir)
    run.write_text(out / "table1.csv", table.to_csv())
    summary = {fs_id: json.loads(rep.to_json()) for fs_id, rep in reports.items()}
    for doc in summary.values():
        doc.pop("cells")
    run.write_text(out / "table1.json", json.dumps(summary, indent=2) + "\n")
    _manifest(run, args, out / "manifest.json")
    print(table.to_csv(), end="")


def cmd_select_features(args, run):
    cohort, _ = _load_clean_cohort(args.data)
    from .features import feature_set_by_id as _by_id
    X3, y, _ = final_record_matrix(cohort, _by_id("set3"))
    fs, trail, report = stepwise_select(X3, y)
    doc = {
        "selected_feature_set": fs.identifier,
        "members": list(fs.members),
        "trail": trail,
        "inference": {
            "terms": list(report.terms),
            "coefficients": list(report.coefficients),
            "p_values": list(report.p_values),
            "adjusted_pseudo_r2": report.adjusted_pseudo_r2,
        },
    }
    run.write_text(args.out, json.dumps(doc, indent=2, default=str) + "\n")
    _manifest(run, args, str(args.out) + ".manifest.json")
    print(f"selected {fs.identifier}: {', '.join(fs.members)}")


def cmd_tune_threshold(args, run):
    model = load_model(args.model)
    datasets = []
    for path in args.data:
        cohort, _ = _load_clean_cohort(path)
        X, y, _ = final_record_matrix(cohort, model.feature_set)
        datasets.append((X, y))
    t = tune_threshold(model, datasets, objective=args.objective)
    doc = {"threshold": t, "objective": args.objective,
           "datasets": [str(p) for p in args.data]}
    run.write_text(args.out, json.dumps(doc, indent=2) + "\n")
    if args.out_model:
        tuned = FittedModel(
            feature_set=model.feature_set,
            coefficients=model.coefficients,
            threshold=t,
            provenance=model.provenance + f"; threshold tuned ({args.objective})",
        )
        run.register(args.out_model)
        save_model(tuned, args.out_model)
    _manifest(run, args, str(args.out) + ".manifest.json")
    print(f"tuned threshold: {t}")


def cmd_evaluate(args, run):
    model = load_model(args.model)
    threshold = args.threshold if args.threshold is not None else model.threshold
    cohort, _ = _load_clean_cohort(args.data)
    X, y, _ = final_record_matrix(cohort, model.feature_set)
    p = probability(model, X)
    cm = confusion_at_threshold(p, y, threshold)
    doc = {
        "cohort": cohort.label,
        "n": int(cm.total),
        "threshold": threshold,
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
        "accuracy": accuracy(cm),
        "f1_positive": f1_positive(cm),
        "f1_micro": f1_micro(cm),
        "auc": roc_auc(p, y),
    }
    run.write_text(args.out, json.dumps(doc, indent=2) + "\n")
    rows = ["cohort,metric,value,threshold,n"]
    for metric in ("accuracy", "f1_positive", "f1_micro", "auc"):
        rows.append(f"{cohort.label},{metric},{doc[metric]!r},{threshold},{cm.total}")
    run.write_text(str(args.out) + ".csv", "\n".join(rows) + "\n")
    _manifest(run, args, str(args.out) + ".manifest.json")
    print(json.dumps(doc, indent=2))


def cmd_forecast(args, run):
    model = load_model(args.model)
    cohort, _ = _load_clean_cohort(args.data, mode="per_record")
    samples, excluded = build_daily_samples(cohort, model)
    report = horizon_metrics(samples, excluded_count=len(excluded))
    forecasts = cohort_forecasts(samples)
    summary = days_ahead_summary(forecasts)
    bins = histogram_bins(
        [f.days_ahead for f in forecasts if f.days_ahead is not None],
        args.bin_width)
    out = Path(args.out_dir)
    run.write_text(out / "horizon.csv", report.to_csv())
    run.write_text(out / "horizon.json", report.to_json())
    run.write_text(out / "histogram.csv", histogram_csv(bins))
    run.write_text(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    _manifest(run, args, out / "manifest.json")
    print(json.dumps(summary, indent=2))


def cmd_score(args, run):
    model = load_model(args.model)
    from .features import expand_biomarkers
    x = expand_biomarkers(args.ldh, args.lymphocyte_pct, args.hs_crp,
                          model.feature_set)
    p = float(probability(model, x))
    print(json.dumps({
        "log_odds": float(log_odds(model, x)),
        "probability": p,
        "predicted_outcome": "death" if p > model.threshold else "survival",
        "threshold": model.threshold,
    }, indent=2))


def cmd_serve(args, run):
    import uvicorn
    from .service import create_app
    static = args.static
    if static is None:
        default = Path("frontend") / "dist"
        static = default if default.is_dir() else None
    app = create_app(args.model, static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prognosis",
        description="Interaction-term logistic regression toolkit for "
                    "biomarker-based fatality risk.")
    parser.add_argument("--config", type=Path, default=None,
                        help="key=value config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--death-rate", type=float, default=0.35)
    p.add_argument("--mean-records", type=float, default=1.875)
    p.add_argument("--noise-scale", type=float, default=0.05)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate, aggregate and filter a cohort")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--mode", choices=["per_patient", "per_record"],
                   default="per_patient")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit one penalized model")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--feature-set", default="set5")
    p.add_argument("--penalty", choices=["l1", "l2", "none"], default="l2")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="cross-validated random search + median model")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--feature-set", default="set5")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("table1", help="feature-set comparison experiment")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("select-features",
                       help="forward stepwise interaction selection")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_select_features)

    p = sub.add_parser("tune-threshold", help="grid-search the decision threshold")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, action="append", required=True)
    p.add_argument("--objective", choices=["accuracy", "f1_positive"],
                   default="accuracy")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--out-model", type=Path, default=None)
    p.set_defaults(func=cmd_tune_threshold)

    p = sub.add_parser("evaluate", help="score a cohort and report metrics")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("forecast", help="multi-day-ahead forecasting evaluation")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--bin-width", type=float, default=1.0)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("score", help="score one biomarker triple")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--ldh", type=float, required=True)
    p.add_argument("--lymphocyte-pct", type=float, required=True)
    p.add_argument("--hs-crp", type=float, required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", type=Path, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def _apply_config_file(parser, argv):
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = Path(argv[i + 1])
    overrides = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"bad config line: {line!r}")
        key, value = line.split("=", 1)
        overrides[key.strip().replace("-", "_")] = value.strip()
    for action in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest for a in action._actions}
        hits = {k: _coerce(action, k, v)
                for k, v in overrides.items() if k in known}
        action.set_defaults(**hits)
        for a in action._actions:  # a config value satisfies a required flag
            if a.dest in hits:
                a.required = False
    return argv


def _coerce(subparser, dest, value):
    for a in subparser._actions:
        if a.dest == dest and a.type is not None:
            return a.type(value)
    return value


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
    except (OSError, ParameterError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    run = _Run()
    try:
        args.func(args, run)
    except (PrognosisError, OSError) as e:
        run.cleanup()
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        run.cleanup()
        raise
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
