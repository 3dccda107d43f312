"""Linear-model baseline: least squares via Householder QR and the partial F-test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .distributions import f_sf

__all__ = ["RankDeficientError", "OlsFit", "FTestResult", "lstsq_qr", "ols_fit", "f_test_feature"]

RANK_TOL = 1e-10


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray  # intercept first
    rss: float
    n: int
    p: int


@dataclass(frozen=True)
class FTestResult:
    f_stat: float
    p_value: float
    df1: int
    df2: int
    degenerate: bool = False


def lstsq_qr(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and residuals of ``y`` on the columns of ``design``.

    Raises RankDeficientError when a column is (numerically) in the span of
    the preceding ones: |R_ii| <= 1e-10 * ||column i||.
    """
    design = np.asarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    q, r = np.linalg.qr(design, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = np.linalg.norm(design, axis=0)
    bad = np.flatnonzero(diag <= RANK_TOL * np.maximum(scale, np.finfo(float).tiny))
    if bad.size:
        raise RankDeficientError(f"design is rank deficient at column(s) {bad.tolist()}")
    coef = np.linalg.solve(r, q.T @ y) if r.shape[0] else np.zeros(0)
    resid = y - design @ coef
    return coef, resid


def _design(x: np.ndarray, columns: Sequence[int]) -> np.ndarray:
    return np.column_stack([np.ones(x.shape[0])] + [x[:, j] for j in columns])


def ols_fit(data: Dataset, columns: Sequence[int] | None = None) -> OlsFit:
    """Regress y on an intercept plus the selected columns (0-based; default all)."""
    cols = list(range(data.d)) if columns is None else [int(j) for j in columns]
    if any(j < 0 or j >= data.d for j in cols):
        raise ValueError(f"column index out of range for d={data.d}")
    if data.n <= len(cols) + 1:
        raise ValueError(f"need n > {len(cols) + 1} observations, got {data.n}")
    coef, resid = lstsq_qr(_design(data.x, cols), data.y)
    return OlsFit(coef, float(resid @ resid), data.n, len(cols))


def f_test_feature(data: Dataset, feature: int) -> FTestResult:
    """Partial F-test that the coefficient of ``feature`` is zero, all other
    columns retained.  F ~ F(1, n - d - 1) under the null."""
    if not 0 <= feature < data.d:
        raise ValueError(f"feature index {feature} out of range for d={data.d}")
    df2 = data.n - data.d - 1
    if df2 < 1:
        raise ValueError(f"need n > d + 1 observations, got n={data.n}, d={data.d}")
    full = ols_fit(data)
    reduced = ols_fit(data, [j for j in range(data.d) if j != feature])
    centred = data.y - data.y.mean()
    if full.rss <= 1e-24 * float(centred @ centred):
        return FTestResult(np.inf, 0.0, 1, df2, degenerate=True)
    f_stat = max(0.0, (reduced.rss - full.rss) / (full.rss / df2))
    return FTestResult(f_stat, f_sf(f_stat, 1, df2), 1, df2)
