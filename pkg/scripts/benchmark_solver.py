#!/usr/bin/env python3
"""Quick solver diagnostics: iterations, wall time, and terminal optimality
residual across penalties and tolerances on a synthetic training matrix.

Usage:
    python scripts/benchmark_solver.py --n 2000 --seed 0
"""

import argparse
import time

from prognosis.data_model import (
    SyntheticCohortSpec,
    final_record_matrix,
    generate_synthetic_cohort,
)
from prognosis.features import feature_set_by_id
from prognosis.glm import FitConfig, PenaltySpec, fit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    fs = feature_set_by_id("set5")
    cohort = generate_synthetic_cohort(SyntheticCohortSpec(
        n_patients=args.n, seed=args.seed))
    X, y, _ = final_record_matrix(cohort, fs)
    print(f"design matrix {X.shape}, {int(y.sum())} deaths\n")

    penalties = [None, PenaltySpec("l2", 1.0), PenaltySpec("l2", 100.0),
                 PenaltySpec("l1", 1.0), PenaltySpec("l1", 100.0)]
    print(f"{'penalty':<14} {'tol':>8} {'iters':>7} {'secs':>7} "
          f"{'residual':>10} {'converged':>9}")
    for penalty in penalties:
        label = "unpenalized" if penalty is None else (
            f"{penalty.kind} c={penalty.c:g}")
        for tol in (1e-4, 1e-6, 1e-8):
            t0 = time.time()
            res = fit(X, y, FitConfig(penalty=penalty, tolerance=tol),
                      feature_set=fs)
            dt = time.time() - t0
            print(f"{label:<14} {tol:>8.0e} {res.iterations:>7} {dt:>7.3f} "
                  f"{res.residual:>10.2e} {str(res.converged):>9}")
    print("\ncoefficients at l2 c=100, tol 1e-8:")
    res = fit(X, y, FitConfig(penalty=PenaltySpec("l2", 100.0),
                              tolerance=1e-8), feature_set=fs)
    for name, b in zip(("intercept",) + fs.members, res.model.coefficients):
        print(f"  {name:<16} {b:+.6e}")


if __name__ == "__main__":
    main()
