import time, warnings, math
import numpy as np
from scipy.stats import ks_2samp, kstest
import sys
sys.path.insert(0, "/root/pkg/src")
from mixtail.asymptotics import SlowVariationParams, stabilizing, canonical_tail
from mixtail.simlab import (ExperimentConfig, boundary_rate_experiment,
    conditional_lr_experiment, joint_limit_experiment, non_null_boundary_experiment,
    top_order_stats_sampler, chi2_gof_20bin, substream)
from mixtail.stable_laws import g_quantile
from mixtail.errors import ClampWarning

T = SlowVariationParams(beta0=1.0)

t0=time.time()
rng = np.random.default_rng(0)
q = g_quantile(rng.uniform(size=2000))
print("g_quantile 2000:", round(time.time()-t0,2), "s, range", q.min(), q.max())

# clamp seed scan
for s in range(10):
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        v = top_order_stats_sampler(T, 4, 3, substream(s, 0))
    if any(issubclass(x.category, ClampWarning) for x in w):
        print("clamp seed", s, "vals", v); break

# LR structure run
t0=time.time()
r = conditional_lr_experiment(ExperimentConfig("gauss_cauchy", 300, 8000, 101,
    conditioning="positivity", target_conditioned=250))
print("lr n300:", round(time.time()-t0,1), "s status", r.status, "cond", r.conditioned,
    "used", r.replicates_used, "deciles", r.summary["r_first_decile"], r.summary["r_last_decile"],
    "ks", round(r.summary["ks_r_uniform"],4), "kappa", round(r.summary["kappa_hat"],4))

# capped
r2 = conditional_lr_experiment(ExperimentConfig("gauss_cauchy", 300, 60, 11,
    conditioning="positivity", target_conditioned=500))
print("capped:", r2.status, r2.conditioned, r2.replicates_used)

# workers determinism
a = conditional_lr_experiment(ExperimentConfig("gauss_cauchy", 200, 3000, 5,
    conditioning="positivity", target_conditioned=40, workers=1)).summary_json()
b = conditional_lr_experiment(ExperimentConfig("gauss_cauchy", 200, 3000, 5,
    conditioning="positivity", target_conditioned=40, workers=3)).summary_json()
print("workers identical:", a == b)

# joint direct vs fast
t0=time.time()
jd = joint_limit_experiment(T, ExperimentConfig(T, 10**4, 40000, 77,
    conditioning="positivity", target_conditioned=250, fast=False))
td=time.time()-t0; t0=time.time()
jf = joint_limit_experiment(T, ExperimentConfig(T, 10**4, 40000, 78,
    conditioning="positivity", target_conditioned=250, fast=True))
tf=time.time()-t0
pv = ks_2samp(jd.vectors["ratio"], jf.vectors["ratio"]).pvalue
print("joint direct", round(td,1), "s fast", round(tf,1), "s ks2 p", round(pv,4),
    "rates", round(jd.summary["rate"]["p_hat"],4), round(jf.summary["rate"]["p_hat"],4),
    "ksmax", round(jd.summary["ks_max_pareto"],4), round(jf.summary["ks_max_pareto"],4))

# top-order pairing at n=1e8
t0=time.time()
B = stabilizing(T, 10**8).scale
vals=[]
for i in range(1500):
    x = top_order_stats_sampler(T, 10**8, 0, substream(42, i))[0]
    e0 = substream(42, i).exponential(size=1)[0]
    vals.append(x*e0/B)
print("pair med:", round(float(np.median(vals)),4), round(time.time()-t0,1), "s")

# marginal max KS at n=1e4
ct = canonical_tail(T)
draws = np.array([top_order_stats_sampler(T, 10**4, 0, substream(9, i))[0] for i in range(2000)])
ks = kstest(draws, lambda x: (1.0 - ct.sf(x))**10**4)
print("marg max ks D", round(ks.statistic,4), "p", round(ks.pvalue,4))

# nonnull
from mixtail.generators import get_pair
t0=time.time()
nn = non_null_boundary_experiment(get_pair("gauss_cauchy"), ExperimentConfig("gauss_cauchy", 2000, 3000, 3))
print("nonnull:", round(nn.summary["p_hat"],4), "se", round(nn.summary["se"],4), round(time.time()-t0,1), "s")

# rate curve
t0=time.time()
rc = boundary_rate_experiment(ExperimentConfig("gauss_cauchy", 300, 4000, 2), [300, 3000])
c = rc.summary["curve"]
print("curve:", [(row["n"], round(row["p_hat"],4), round(row["theory"],4)) for row in c], round(time.time()-t0,1),"s")

# chi2 gof G
t0=time.time()
vals=[]
for s in range(25):
    u = np.random.default_rng(1000+s).uniform(size=240)
    vals.append(chi2_gof_20bin(g_quantile(u), "G"))
print("gof mean", round(float(np.mean(vals)),2), "minmax", round(min(vals),1), round(max(vals),1), round(time.time()-t0,1),"s")
g2 = g_quantile(np.random.default_rng(77).uniform(size=2000))
print("gof G vs chi21:", round(chi2_gof_20bin(g2,"G"),1), round(chi2_gof_20bin(g2,"chi2_1"),1))
