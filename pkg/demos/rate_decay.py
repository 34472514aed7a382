"""Decay of the positive-boundary probability under the null.

Estimates P(theta_hat > 0) for null samples as the sample size grows
and prints it against the slow theoretical decay: 1/(2 log n) when the
density ratio has a Cauchy-type tail, 1/sqrt(2 log n) for the
Laplace-type tail.  The approach is logarithmic, so the ratio column
moves toward 1 very slowly; that slowness is the point.

Run:  python3 demos/rate_decay.py        (about half a minute)
"""

import math

from mixtail.simlab import ExperimentConfig, boundary_rate_experiment

GRID = [10**3, 10**4, 3 * 10**4]
REPLICATES = 4000

for pair, theory_label, theory in (
    ("gauss_cauchy", "1/(2 log n)", lambda n: 1.0 / (2.0 * math.log(n))),
    ("gauss_laplace", "1/sqrt(2 log n)", lambda n: 1.0 / math.sqrt(2.0 * math.log(n))),
):
    config = ExperimentConfig(pair, n=GRID[-1], replicates=REPLICATES, master_seed=0)
    result = boundary_rate_experiment(config, GRID)
    print(f"\n{pair}  ({REPLICATES} replicates per n, theory {theory_label})")
    print(f"  {'n':>7} {'p_hat':>8} {'se':>8} {'theory':>8} {'ratio':>6}")
    for row in result.summary["curve"]:
        t = theory(row["n"])
        print(
            f"  {row['n']:>7} {row['p_hat']:>8.4f} {row['se']:>8.4f}"
            f" {t:>8.4f} {row['p_hat'] / t:>6.2f}"
        )
