"""Data preparation and per-feature association scans."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset
from .ftest import f_test_feature, lstsq_qr
from .lrtest import HypothesisSpec, default_configs, sqlr_test
from .network import TrainConfig

__all__ = [
    "DataError",
    "MISSING",
    "load_csv",
    "scale_features",
    "unscale_features",
    "adjust_covariates",
    "ScanConfig",
    "FeatureResult",
    "ScanResult",
    "scan",
    "file_digest",
    "warn_low_cardinality",
]

log = logging.getLogger(__name__)

MISSING = frozenset({"", "na", "nan", "null"})


class DataError(ValueError):
    pass


def _parse_cell(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric value {text!r} at line {line}, column {column!r}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at line {line}, column {column!r}")
    return value


def load_csv(
    path,
    response_column: str,
    feature_columns: Optional[Sequence[str]] = None,
    covariate_columns: Sequence[str] = (),
) -> tuple[Dataset, np.ndarray, int]:
    """Read a headed CSV file into a dataset and a covariate matrix.

    ``feature_columns`` defaults to every column that is neither the response
    nor a covariate.  Rows with a missing cell (empty, NA, NaN, null) in any
    selected column are dropped.  Returns ``(data, covariates, n_dropped)``;
    values are not rescaled.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        covariate_columns = list(covariate_columns)
        if feature_columns is None:
            skip = {response_column, *covariate_columns}
            feature_columns = [h for h in header if h not in skip]
        feature_columns = list(feature_columns)
        for name in [response_column, *feature_columns, *covariate_columns]:
            if name not in header:
                raise DataError(f"column {name!r} not found in {path}")
        if not feature_columns:
            raise DataError("no feature columns selected")
        wanted = [response_column, *feature_columns, *covariate_columns]
        idx = [header.index(name) for name in wanted]

        rows, dropped = [], 0
        for line, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(f"line {line} has {len(record)} fields, header has {len(header)}")
            cells = [record[i].strip() for i in idx]
            if any(c.lower() in MISSING for c in cells):
                dropped += 1
                continue
            rows.append([_parse_cell(c, line, name) for c, name in zip(cells, wanted)])
    if dropped:
        log.warning("dropped %d row(s) with missing values", dropped)
    if not rows:
        raise DataError("no complete rows remain")
    table = np.array(rows, dtype=np.float64)
    p = len(feature_columns)
    data = Dataset(table[:, 1 : 1 + p], table[:, 0], feature_columns)
    return data, table[:, 1 + p :], dropped


def scale_features(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map every column affinely onto [-1, 1] by its min and max.

    Returns the scaled matrix and a (d, 2) array of per-column (min, max).
    Constant columns become 0 with a warning.
    """
    x = np.asarray(x, dtype=np.float64)
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = hi - lo
    const = span == 0
    if np.any(const):
        warnings.warn(f"constant column(s) {np.flatnonzero(const).tolist()} mapped to 0", stacklevel=2)
    scaled = np.zeros_like(x)
    ok = ~const
    scaled[:, ok] = 2.0 * (x[:, ok] - lo[ok]) / span[ok] - 1.0
    return scaled, np.column_stack((lo, hi))


def unscale_features(scaled: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + (np.asarray(scaled) + 1.0) * (hi - lo) / 2.0


def adjust_covariates(y: np.ndarray, covariates: Optional[np.ndarray] = None) -> np.ndarray:
    """Residuals of ``y`` after least-squares regression on an intercept and the covariates."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    cov = np.zeros((n, 0)) if covariates is None else np.asarray(covariates, dtype=np.float64).reshape(n, -1)
    if n <= cov.shape[1] + 1:
        raise DataError(f"need more than {cov.shape[1] + 1} rows to adjust for {cov.shape[1]} covariate(s)")
    design = np.column_stack((np.ones(n), cov))
    _, resid = lstsq_qr(design, y)
    return resid


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True)
class ScanConfig:
    """Settings shared by every per-feature test in a scan.

    ``marginal`` tests each feature on its own (single-locus style: the null
    model is the sample mean); otherwise feature j is tested inside the full
    design with the others kept in both models.  ``width=None`` means
    floor(sqrt(n)).
    """

    null_config: TrainConfig = field(default_factory=lambda: default_configs()[0])
    alt_config: TrainConfig = field(default_factory=lambda: default_configs()[1])
    width: Optional[int] = None
    v_budget: float = 1000.0
    m_budget: float = 1000.0
    marginal: bool = False
    with_ftest: bool = True
    workers: int = 1


@dataclass(frozen=True)
class FeatureResult:
    index: int
    name: str
    lr_stat: float
    sigma_hat_sq: float
    p_sqlr: float
    p_ftest: Optional[float]
    clamped: bool
    rank: int = 0

    def to_dict(self) -> dict:
        return {
            "feature": self.name,
            "lr_stat": self.lr_stat,
            "sigma_hat_sq": self.sigma_hat_sq,
            "p_sqlr": self.p_sqlr,
            "p_ftest": self.p_ftest,
            "clamped": self.clamped,
        }


@dataclass(frozen=True)
class ScanResult:
    results: tuple[FeatureResult, ...]

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)

    def to_text(self) -> str:
        name_w = max([len("Feature")] + [len(r.name) for r in self.results])
        lines = [
            f"{'Rank':>4}  {'Feature':<{name_w}}  {'LR stat':>12}  {'P (SQLR)':>11}  {'P (F-test)':>11}",
        ]
        for r in self.results:
            pf = "-" if r.p_ftest is None else f"{r.p_ftest:.4e}"
            lines.append(
                f"{r.rank:>4}  {r.name:<{name_w}}  {r.lr_stat:>12.4f}  {r.p_sqlr:>11.4e}  {pf:>11}"
            )
        return "\n".join(lines)


def _test_one(args):
    j, data, cfg = args
    if cfg.marginal:
        sub = Dataset(data.x[:, [j]], data.y)
        spec = HypothesisSpec([0])
        ftest_data, ftest_col = sub, 0
    else:
        sub, spec = data, HypothesisSpec([j])
        ftest_data, ftest_col = data, j
    out = sqlr_test(sub, spec, cfg.width, cfg.null_config, cfg.alt_config, cfg.v_budget, cfg.m_budget)
    p_f = None
    if cfg.with_ftest and ftest_data.n > ftest_data.d + 1:
        p_f = f_test_feature(ftest_data, ftest_col).p_value
    return FeatureResult(j, data.names()[j], out.lr_stat, out.sigma_hat_sq, out.p_value, p_f, out.clamped)


def scan(data: Dataset, config: ScanConfig = ScanConfig(), features: Optional[Sequence[int]] = None) -> ScanResult:
    """Test every feature (or the given 0-based subset) one at a time.

    Every feature is trained from the same seeds, so results do not depend on
    column order or on whether features run in parallel.  Results are sorted
    by SQLR p-value, ties broken by column index.
    """
    feats = list(range(data.d)) if features is None else [int(j) for j in features]
    jobs = [(j, data, config) for j in feats]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_test_one, jobs))
    else:
        rows = [_test_one(job) for job in jobs]
    rows.sort(key=lambda r: (r.p_sqlr, r.index))
    ranked = tuple(
        FeatureResult(r.index, r.name, r.lr_stat, r.sigma_hat_sq, r.p_sqlr, r.p_ftest, r.clamped, k)
        for k, r in enumerate(rows, start=1)
    )
    return ScanResult(ranked)


def warn_low_cardinality(data: Dataset, max_levels: int = 3) -> list[str]:
    """Names of columns with at most ``max_levels`` distinct values (e.g. genotypes),
    which are analysed as numeric."""
    names = [
        name for j, name in enumerate(data.names()) if np.unique(data.x[:, j]).size <= max_levels
    ]
    if names:
        warnings.warn(
            f"{len(names)} column(s) have <= {max_levels} levels and are treated as numeric: "
            + ", ".join(names[:10]) + (" ..." if len(names) > 10 else ""),
            stacklevel=2,
        )
    return names
