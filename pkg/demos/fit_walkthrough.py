"""Fitting the mixing weight on a contaminated sample.

Builds a sample that is mostly standard normal with a small Cauchy
admixture, fits the two-component mixture by maximum likelihood, and
reports the estimate, the likelihood-ratio statistic, and the units
most confidently attributed to the heavy-tailed component.  A pure
null sample is fitted alongside to show the boundary estimate at zero.

Run:  python3 demos/fit_walkthrough.py
"""

import numpy as np

from mixtail.generators import get_pair, theta_bounds
from mixtail.inference import activity_rates, fit_theta, ratio_sample

rng = np.random.default_rng(42)
pair = get_pair("gauss_cauchy")

n, theta_true = 500, 0.03
labels = rng.random(n) < theta_true
x = np.where(labels, pair.sample_f1(rng, n), pair.sample_f0(rng, n))

sample = ratio_sample(pair, x)
fit = fit_theta(sample, upper=1.0)
print(f"contaminated sample: n={n}, true weight {theta_true}")
print(f"  theta_hat = {fit.theta_hat_hi:.4f}")
print(f"  lambda    = {fit.lambda_:.3f}  (LR statistic against theta = 0)")
print(f"  positive  = {fit.positive}  ({int(labels.sum())} planted signals)")

rates = activity_rates(sample, fit.theta_hat_hi)
top = np.argsort(rates.rates)[::-1][:5]
print("  top attributed units (rate = fitted P(unit is non-null)):")
for i in top:
    mark = "*" if labels[i] else " "
    print(f"    x = {x[i]:+9.3f}  rate = {rates.rates[i]:.3f} {mark}")
print("  (* marks a genuinely planted unit)")

null = ratio_sample(pair, pair.sample_f0(rng, n))
nfit = fit_theta(null, upper=1.0)
print(f"\npure null sample:    theta_hat = {nfit.theta_hat_hi:.4f},"
      f" lambda = {nfit.lambda_:.3f}, positive = {nfit.positive}")

bounds = theta_bounds(pair)
print(f"\nextended weight range for this pair: "
      f"[{bounds.theta_min:.4f}, {bounds.theta_max:.4f}]")
efit = fit_theta(sample, upper=bounds.theta_max)
print(f"fit over the extended range: theta_hat = {efit.theta_hat_hi:.4f}")
