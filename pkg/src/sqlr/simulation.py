"""Monte Carlo study of size and power for the SQLR test and the F-test.

Data follow

    Y = 8 + X1*X2 + exp(X3*X4) + 0.1*X5 + noise,   X ~ Uniform([-1, 1]^6),

so X6 carries no signal (type I error) and X1..X5 measure power.
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import rng
from .dataset import Dataset
from .ftest import f_test_feature
from .lrtest import HypothesisSpec, default_configs, default_width, sqlr_test
from .network import TrainConfig

__all__ = [
    "SQLR",
    "FTEST",
    "SimModel",
    "McReport",
    "regression_function",
    "gen_data",
    "run_mc",
    "table_report",
    "report_records",
]

SQLR = "SQLR"
FTEST = "F-test"
METHODS = (SQLR, FTEST)


@dataclass(frozen=True)
class SimModel:
    n: int
    d: int = 6
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.d < 5:
            raise ValueError("the regression function uses five covariates; d must be >= 5")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")


def regression_function(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return 8.0 + x[:, 0] * x[:, 1] + np.exp(x[:, 2] * x[:, 3]) + 0.1 * x[:, 4]


def gen_data(model: SimModel) -> Dataset:
    """Draw one dataset.

    The stream keyed by ``model.seed`` supplies n*d uniforms for X (row-major,
    mapped u -> 2u - 1), then the Box-Muller uniforms for the noise.
    """
    gen = rng.stream(model.seed)
    x = 2.0 * rng.uniforms(gen, (model.n, model.d)) - 1.0
    noise = rng.box_muller(gen, model.n)
    y = regression_function(x) + model.noise_sd * noise
    return Dataset(x, y)


@dataclass
class McReport:
    """Rejection counts per (method, feature) for one sample size.

    Features are 0-based column indices.  ``clamped`` counts SQLR runs whose
    alternative loss exceeded the null loss.
    """

    n: int
    reps: int
    level: float
    base_seed: int
    features: tuple[int, ...]
    methods: tuple[str, ...]
    rejections: dict = field(default_factory=dict)
    clamped: int = 0
    settings: dict = field(default_factory=dict)

    def rate(self, method: str, feature: int) -> float:
        return self.rejections[(method, feature)] / self.reps

    def __eq__(self, other):
        if not isinstance(other, McReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "reps": self.reps,
            "level": self.level,
            "base_seed": self.base_seed,
            "features": list(self.features),
            "methods": list(self.methods),
            "rejections": {f"{m}:{j}": self.rejections[(m, j)] for m in self.methods for j in self.features},
            "clamped": self.clamped,
            "settings": self.settings,
        }


def _one_rep(args):
    t, n, level, features, base_seed, methods, width, null_cfg, alt_cfg = args
    seed = rng.derive_seed(base_seed, t)
    data = gen_data(SimModel(n=n, seed=seed))
    train_seed = rng.derive_seed(seed, 1)
    rejects = Counter()
    clamped = 0
    for j in features:
        if SQLR in methods:
            out = sqlr_test(
                data,
                HypothesisSpec([j]),
                width,
                replace(null_cfg, seed=train_seed),
                replace(alt_cfg, seed=train_seed),
            )
            rejects[(SQLR, j)] += out.p_value < level
            clamped += out.clamped
        if FTEST in methods:
            rejects[(FTEST, j)] += f_test_feature(data, j).p_value < level
    return rejects, clamped


def run_mc(
    n: int,
    reps: int,
    level: float = 0.05,
    features: Sequence[int] = tuple(range(6)),
    base_seed: int = 0,
    methods: Iterable[str] = METHODS,
    train_overrides: Optional[tuple[TrainConfig, TrainConfig]] = None,
    width: Optional[int] = None,
    workers: int = 1,
    reps_offset: int = 0,
) -> McReport:
    """Replicate the study ``reps`` times at sample size ``n``.

    Replication ``t`` draws its data from ``derive_seed(base_seed, t)`` and
    trains from ``derive_seed(that seed, 1)``; every feature is tested on the
    same dataset.  ``reps_offset`` shifts ``t`` so a run can be split into
    chunks whose counts add up to the whole.
    """
    if reps < 1:
        raise ValueError(f"reps must be positive, got {reps}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    methods = tuple(m for m in METHODS if m in set(methods))
    if not methods:
        raise ValueError("no known method requested")
    features = tuple(int(j) for j in features)
    if not features or min(features) < 0 or max(features) >= 6:
        raise ValueError("features must be indices in 0..5")
    null_cfg, alt_cfg = train_overrides if train_overrides is not None else default_configs()
    width = default_width(n) if width is None else width

    jobs = [
        (t, n, level, features, base_seed, methods, width, null_cfg, alt_cfg)
        for t in range(reps_offset, reps_offset + reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_rep, jobs))
    else:
        results = [_one_rep(job) for job in jobs]

    total = Counter({(m, j): 0 for m in methods for j in features})
    clamped = 0
    for rejects, c in results:
        total.update(rejects)
        clamped += c
    settings = {
        "width": width,
        "null_iterations": null_cfg.iterations,
        "null_step": null_cfg.step_base,
        "alt_iterations": alt_cfg.iterations,
        "alt_step": alt_cfg.step_base,
        "init_scale": null_cfg.init_scale,
        "reps_offset": reps_offset,
    }
    return McReport(n, reps, level, base_seed, features, methods, dict(total), clamped, settings)


def report_records(reports: Sequence[McReport]) -> list[dict]:
    """Flat result rows, one per (n, method, feature)."""
    rows = []
    for rep in sorted(reports, key=lambda r: r.n):
        for m in rep.methods:
            for j in rep.features:
                rows.append({
                    "feature": f"X{j + 1}",
                    "n": rep.n,
                    "method": m,
                    "rejections": int(rep.rejections[(m, j)]),
                    "reps": rep.reps,
                    "rate": rep.rate(m, j),
                })
    return rows


def table_report(reports: Sequence[McReport]) -> str:
    """Rates laid out with one row per feature and one column per (method, n)."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to tabulate")
    first = reports[0]
    for rep in reports[1:]:
        if rep.level != first.level or rep.features != first.features:
            raise ValueError("reports disagree on level or feature set")
    ns = sorted(r.n for r in reports)
    if len(set(ns)) != len(ns):
        raise ValueError("more than one report for the same sample size")
    by_n = {r.n: r for r in reports}
    methods = [m for m in METHODS if any(m in r.methods for r in reports)]

    label_w = max(len("Sample Size"), 5)
    header_top = " " * label_w
    header = "Sample Size".ljust(label_w)
    for m in methods:
        cols = [str(n).rjust(7) for n in ns]
        header += " |" + "".join(cols)
        header_top += " |" + m.center(7 * len(ns))
    lines = [header_top, header, "-" * len(header)]
    for j in first.features:
        row = f"X{j + 1}".ljust(label_w)
        for m in methods:
            row += " |"
            for n in ns:
                rep = by_n[n]
                row += (f"{rep.rate(m, j):.3f}" if m in rep.methods else "-").rjust(7)
        lines.append(row)
    return "\n".join(lines)


def table_json(reports: Sequence[McReport]) -> str:
    table_report(reports)  # same consistency checks
    return json.dumps({"results": report_records(reports)}, indent=2)
