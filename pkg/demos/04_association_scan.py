"""
Scanning a CSV file
===================

Residualize the response on a nuisance covariate, rescale the features to
[-1, 1], then test each feature in turn.  The command line tool runs the same
steps with ``sqlr scan --input FILE --response y --covariates age``.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from sqlr import ScanConfig, TrainConfig, adjust_covariates, load_csv, scale_features, scan
from sqlr.dataset import Dataset

# %%
# Write a toy study: 400 subjects, four SNP-like 0/1/2 columns and an age.
rng = np.random.default_rng(5)
n = 400
snps = rng.integers(0, 3, (n, 4)).astype(float)
age = rng.uniform(20, 70, n)
y = 0.4 * snps[:, 1] + 0.02 * age + rng.normal(size=n)
path = Path(tempfile.mkdtemp()) / "study.csv"
with path.open("w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["y", "snp1", "snp2", "snp3", "snp4", "age"])
    w.writerows(np.column_stack((y, snps, age)).tolist())

# %%
data, cov, dropped = load_csv(path, "y", covariate_columns=["age"])
resid = adjust_covariates(data.y, cov)
x, bounds = scale_features(data.x)
ready = Dataset(x, resid, data.feature_names)
print(f"{ready.n} rows, {dropped} dropped; scaling bounds:\n{bounds}")

# %%
# Marginal mode tests one feature at a time against the sample mean.
cfg = ScanConfig(TrainConfig(1500, 0.1), TrainConfig(1500, 0.8), marginal=True)
print(scan(ready, cfg).to_text())
