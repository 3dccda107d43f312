"""Sieve quasi-likelihood ratio test of feature significance.

The null model is a sieve network that ignores the tested inputs (their
incoming weights are held at zero); the alternative model is trained over
the full sieve starting from the null fit.  The statistic

    n * (Q(null) - Q(alt)) / sigma_hat^2,   sigma_hat^2 = Q(null),

is referred to the chi-square distribution with one degree of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .dataset import Dataset
from .distributions import chisq1_sf
from .network import SieveNetwork, TrainConfig, init_network, mse, train

__all__ = [
    "NULL_STEP",
    "ALT_STEP",
    "DegenerateFitError",
    "HypothesisSpec",
    "TestOutcome",
    "canonical_order",
    "default_width",
    "default_configs",
    "fit_null",
    "fit_alt",
    "lr_statistic",
    "sigma_hat_sq",
    "sqlr_test",
]

NULL_STEP = 0.1
ALT_STEP = 0.1 / 300


class DegenerateFitError(ArithmeticError):
    """The null model reproduces the response exactly, so no variance estimate exists."""


@dataclass(frozen=True)
class HypothesisSpec:
    """Tested features as 0-based column indices."""

    tested_features: tuple[int, ...]

    def __init__(self, tested_features: Iterable[int]):
        feats = tuple(int(j) for j in tested_features)
        if not feats:
            raise ValueError("at least one feature must be tested")
        if len(set(feats)) != len(feats):
            raise ValueError(f"tested features must be distinct, got {feats}")
        if min(feats) < 0:
            raise ValueError("feature indices must be non-negative")
        object.__setattr__(self, "tested_features", tuple(sorted(feats)))

    def check(self, d: int):
        if self.tested_features[-1] >= d:
            raise ValueError(f"tested feature {self.tested_features[-1]} out of range for d={d}")

    def covers_all(self, d: int) -> bool:
        return len(self.tested_features) == d


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # not a pytest class

    lr_stat: float
    sigma_hat_sq: float
    scaled_stat: float
    p_value: float
    loss_null: float
    loss_alt: float
    spec: HypothesisSpec
    n: int
    clamped: bool = False
    null_net: Optional[SieveNetwork] = field(default=None, repr=False, compare=False)
    alt_net: Optional[SieveNetwork] = field(default=None, repr=False, compare=False)


def default_width(n: int) -> int:
    return max(1, math.isqrt(n))


def default_configs(iterations: int = 3000, seed: int = 0) -> tuple[TrainConfig, TrainConfig]:
    """Null and alternative training settings with the 0.1 and 0.1/300 step constants."""
    return (
        TrainConfig(iterations=iterations, step_base=NULL_STEP, seed=seed),
        TrainConfig(iterations=iterations, step_base=ALT_STEP, seed=seed),
    )


def _embed(net: SieveNetwork, tested: tuple[int, ...], d: int) -> SieveNetwork:
    keep = [j for j in range(d) if j not in tested]
    gammas = np.zeros((net.r, d))
    gammas[:, keep] = net.gammas
    return replace(net, gammas=gammas)


def canonical_order(data: Dataset) -> Dataset:
    """Rows sorted lexicographically by (x_1, ..., x_d, y)."""
    keys = np.column_stack((data.x, data.y)).T[::-1]
    order = np.lexsort(keys)
    return Dataset(data.x[order], data.y[order], data.feature_names)


def fit_null(
    data: Dataset,
    spec: HypothesisSpec,
    width: int,
    config: TrainConfig,
    v_budget: float = 1000.0,
    m_budget: float = 1000.0,
) -> SieveNetwork:
    """Fit the sieve with the tested inputs removed and re-embed it in dimension d.

    When every feature is tested the null model is the constant mean(y).
    """
    spec.check(data.d)
    if width < 1:
        raise ValueError(f"width must be at least 1, got {width}")
    if spec.covers_all(data.d):
        net = SieveNetwork(float(np.mean(data.y)), np.zeros(width), np.zeros((width, data.d)),
                           np.zeros(width), v_budget, m_budget)
        if not net.is_feasible():
            net = replace(net, alpha0=math.copysign(v_budget, net.alpha0))
        return net
    reduced = data.drop_columns(spec.tested_features)
    init = init_network(width, reduced.d, config.init_scale, config.seed, v_budget, m_budget)
    net, _ = train(reduced, config, init)
    return _embed(net, spec.tested_features, data.d)


def _warm_start(null_net: SieveNetwork, config: TrainConfig) -> SieveNetwork:
    if np.any(null_net.alphas) or np.any(null_net.gammas) or np.any(null_net.gamma0s):
        return null_net
    # constant null: every hidden unit is dead and gradient descent cannot revive
    # it, so draw the input weights at random; alphas stay 0 so f is unchanged
    draw = init_network(null_net.r, null_net.d, config.init_scale, config.seed,
                        null_net.v_budget, null_net.m_budget)
    return replace(null_net, gammas=draw.gammas, gamma0s=draw.gamma0s)


def _fit_alt(data: Dataset, config: TrainConfig, null_net: SieveNetwork):
    if null_net.d != data.d:
        raise ValueError(f"null network expects {null_net.d} inputs, data has {data.d}")
    return train(data, config, _warm_start(null_net, config))


def fit_alt(data: Dataset, config: TrainConfig, null_net: SieveNetwork) -> SieveNetwork:
    """Train over the full sieve starting from ``null_net``.

    The tested inputs' weights start at zero, so the starting point has
    exactly the null loss and best-iterate tracking keeps the result below it.
    """
    return _fit_alt(data, config, null_net)[0]


def lr_statistic(loss_null: float, loss_alt: float, n: int) -> float:
    """n * (loss_null - loss_alt), clamped at zero."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return max(0.0, n * (loss_null - loss_alt))


def sigma_hat_sq(data: Dataset, null_net: SieveNetwork) -> float:
    """Mean squared null residual (denominator n)."""
    s2 = mse(null_net, data)
    if s2 <= 0.0:
        raise DegenerateFitError("null model fits the data exactly; variance estimate is zero")
    return s2


def sqlr_test(
    data: Dataset,
    spec: HypothesisSpec,
    width: Optional[int] = None,
    null_config: Optional[TrainConfig] = None,
    alt_config: Optional[TrainConfig] = None,
    v_budget: float = 1000.0,
    m_budget: float = 1000.0,
) -> TestOutcome:
    """Run the full test: null fit, warm-started alternative fit, statistic and p-value.

    Missing settings fall back to width floor(sqrt(n)) and :func:`default_configs`.
    Rows are put in a canonical order first, so the outcome does not depend
    on how the sample was ordered.
    """
    spec.check(data.d)
    data = canonical_order(data)
    width = default_width(data.n) if width is None else width
    defaults = default_configs()
    null_config = defaults[0] if null_config is None else null_config
    alt_config = defaults[1] if alt_config is None else alt_config

    null_net = fit_null(data, spec, width, null_config, v_budget, m_budget)
    loss_null = sigma_hat_sq(data, null_net)
    alt_net, loss_alt = _fit_alt(data, alt_config, null_net)
    raw = data.n * (loss_null - loss_alt)
    lr = lr_statistic(loss_null, loss_alt, data.n)
    scaled = lr / loss_null
    return TestOutcome(
        lr_stat=lr,
        sigma_hat_sq=loss_null,
        scaled_stat=scaled,
        p_value=chisq1_sf(scaled),
        loss_null=loss_null,
        loss_alt=loss_alt,
        spec=spec,
        n=data.n,
        clamped=raw < 0,
        null_net=null_net,
        alt_net=alt_net,
    )
