import json, time
from mixtail import simlab as S

out = {}
t0 = time.time()
cfg = S.ExperimentConfig(pair_or_tail="gauss_cauchy", n=100000, replicates=120000,
                         master_seed=0, conditioning="positivity", target_conditioned=2000)
r = S.conditional_lr_experiment(cfg)
out["main"] = {"used": r.replicates_used, "cond": r.conditioned, "status": r.status,
               "secs": round(time.time()-t0,1), **{k: v for k, v in r.summary.items() if k != "rate"},
               "rate": r.summary["rate"]}
orders = []
for seed in range(1, 11):
    t1 = time.time()
    cfg = S.ExperimentConfig(pair_or_tail="gauss_cauchy", n=100000, replicates=60000,
                             master_seed=seed, conditioning="positivity", target_conditioned=600)
    r = S.conditional_lr_experiment(cfg)
    orders.append({"seed": seed, "chi2G": r.summary["chi2_vs_G"],
                   "chi2chi1": r.summary["chi2_vs_chi2_1"],
                   "kappa": r.summary["kappa_hat"], "ks": r.summary["ks_r_uniform"],
                   "secs": round(time.time()-t1,1)})
out["seeds"] = orders
out["g_wins"] = sum(1 for o in orders if o["chi2G"] < o["chi2chi1"])
with open(".calib/lr_calib.json", "w") as f:
    json.dump(out, f, indent=1)
print("done", round(time.time()-t0,1), "s, g_wins", out["g_wins"])
