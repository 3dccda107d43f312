"""
A small size and power study
============================

Rejection rates over repeated simulated datasets.  X6 has no effect, so its
rate estimates the type I error.  X5 has a weak linear effect.
"""

from sqlr import TrainConfig, run_mc, table_report

# %%
# Short fits and few replications: enough to see the pattern in a few
# minutes on one core.  Raise reps and iterations for real numbers.
cfg = (TrainConfig(800, 0.1), TrainConfig(800, 0.1 / 20))
reports = [run_mc(n, reps=20, features=[4, 5], base_seed=11, train_overrides=cfg) for n in (200, 800)]

# %%
# Rows are covariates; columns are method by sample size.
print(table_report(reports))

# %%
# Replications are independent, so two workers give the same counts.
again = run_mc(200, reps=20, features=[4, 5], base_seed=11, train_overrides=cfg, workers=2)
print("parallel run identical:", again == reports[0])
