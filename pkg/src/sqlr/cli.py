"""Command-line entry point: ``sqlr {test,scan,adjust,simulate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .dataset import Dataset
from .ftest import RankDeficientError, f_test_feature
from .lrtest import ALT_STEP, NULL_STEP, DegenerateFitError, HypothesisSpec, default_width, sqlr_test
from .network import TrainConfig
from .pipeline import (
    MISSING,
    DataError,
    ScanConfig,
    adjust_covariates,
    file_digest,
    load_csv,
    scale_features,
    scan,
    warn_low_cardinality,
)
from .simulation import METHODS, report_records, run_mc, table_report

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
DEFAULT_ITERS = 3000

log = logging.getLogger("sqlr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _add_training_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--width", type=int, default=None, help="hidden units (default floor(sqrt(n)))")
    p.add_argument("--v-budget", type=float, default=1000.0)
    p.add_argument("--m-budget", type=float, default=1000.0)
    p.add_argument("--null-iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--alt-iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--null-step", type=float, default=NULL_STEP, help="c in c/log(e+k) for the null fit")
    p.add_argument("--alt-step", type=float, default=ALT_STEP, help="c in c/log(e+k) for the alternative fit")
    p.add_argument("--init-scale", type=float, default=0.5)
    p.add_argument("--level", type=float, default=0.05)


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--output", type=Path, default=None, help="write here instead of stdout")


def _add_data_flags(p: argparse.ArgumentParser, features_required: bool):
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--features", type=_csv_list, required=features_required,
                   default=None, help="comma-separated column names")
    p.add_argument("--covariates", type=_csv_list, default=[],
                   help="regress the response on these first and test the residual")
    p.add_argument("--no-scale", action="store_true", help="do not min-max scale features to [-1, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqlr", description="Neural-network sieve quasi-likelihood ratio tests.")
    parser.add_argument("--version", action="version", version=f"sqlr {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test whether the listed features are jointly associated")
    _add_data_flags(p, features_required=True)
    _add_training_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("scan", help="test every feature in turn")
    _add_data_flags(p, features_required=False)
    _add_training_flags(p)
    p.add_argument("--marginal", action="store_true",
                   help="test each feature alone against the sample-mean null")
    p.add_argument("--workers", type=int, default=1)
    _add_output_flags(p)

    p = sub.add_parser("adjust", help="replace the response by its residual on covariates")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--covariates", type=_csv_list, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("simulate", help="Monte Carlo size/power study on the built-in model")
    p.add_argument("--n", type=lambda s: [int(v) for v in _csv_list(s)], required=True,
                   help="sample size(s), comma-separated")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", type=_csv_list, default=["1", "2", "3", "4", "5", "6"],
                   help="1-based covariate numbers or names X1..X6")
    p.add_argument("--methods", type=_csv_list, default=list(METHODS))
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--null-iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--alt-iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--null-step", type=float, default=NULL_STEP)
    p.add_argument("--alt-step", type=float, default=ALT_STEP)
    p.add_argument("--init-scale", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)
    _add_output_flags(p)
    return parser


def _configs(args) -> tuple[TrainConfig, TrainConfig]:
    try:
        return (
            TrainConfig(args.null_iters, args.null_step, args.seed, args.init_scale),
            TrainConfig(args.alt_iters, args.alt_step, args.seed, args.init_scale),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_level(level: float):
    if not 0 < level < 1:
        raise UsageError(f"--level must lie in (0, 1), got {level}")


# presentation-only flags; leaving them out keeps the manifest independent of where output goes
_NOT_RECORDED = {"output", "verbose"}


def _recorded_argv(argv) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
        elif tok == "--output":
            skip = True
        elif not tok.startswith("--output="):
            out.append(tok)
    return out


def _manifest(args, argv, extra=None) -> dict:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in _NOT_RECORDED
    }
    inputs = {}
    path = getattr(args, "input", None)
    if path is not None:
        inputs[str(path)] = file_digest(path)
    out = {
        "tool": "sqlr",
        "version": __version__,
        "command": ["sqlr", *_recorded_argv(argv)],
        "config": config,
        "seed": args.seed if hasattr(args, "seed") else None,
        "inputs": inputs,
    }
    if extra:
        out.update(extra)
    return out


def _prepare(args) -> tuple[Dataset, dict]:
    data, covariates, dropped = load_csv(args.input, args.response, args.features, args.covariates)
    info = {"rows_used": data.n, "rows_dropped": dropped}
    y = data.y
    if args.covariates:
        y = adjust_covariates(y, covariates)
    x = data.x
    if not args.no_scale:
        x, bounds = scale_features(x)
        info["scaling"] = {name: [lo, hi] for name, (lo, hi) in zip(data.names(), bounds.tolist())}
    data = Dataset(x, y, data.feature_names)
    warn_low_cardinality(data)
    return data, info


def _emit(text: str, output):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def cmd_test(args, argv) -> int:
    _check_level(args.level)
    null_cfg, alt_cfg = _configs(args)
    data, info = _prepare(args)
    names = data.names()
    spec = HypothesisSpec(names.index(f) for f in args.features)
    out = sqlr_test(data, spec, args.width, null_cfg, alt_cfg, args.v_budget, args.m_budget)
    p_f = None
    if len(spec.tested_features) == 1 and data.n > data.d + 1:
        p_f = f_test_feature(data, spec.tested_features[0]).p_value
    row = {
        "feature": ",".join(names[j] for j in spec.tested_features),
        "lr_stat": out.lr_stat,
        "sigma_hat_sq": out.sigma_hat_sq,
        "p_sqlr": out.p_value,
        "p_ftest": p_f,
        "clamped": out.clamped,
        "scaled_stat": out.scaled_stat,
        "loss_null": out.loss_null,
        "loss_alt": out.loss_alt,
        "reject": out.p_value < args.level,
    }
    width = args.width or default_width(data.n)
    if args.format == "json":
        _emit(_dump({"manifest": _manifest(args, argv, {"data": info, "width": width}), "results": [row]}), args.output)
    else:
        lines = [f"{k:>13}: {v}" for k, v in row.items()]
        _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_scan(args, argv) -> int:
    null_cfg, alt_cfg = _configs(args)
    data, info = _prepare(args)
    cfg = ScanConfig(null_cfg, alt_cfg, args.width, args.v_budget, args.m_budget,
                     marginal=args.marginal, workers=args.workers)
    result = scan(data, cfg)
    if args.format == "json":
        rows = [r.to_dict() for r in result]
        _emit(_dump({"manifest": _manifest(args, argv, {"data": info}), "results": rows}), args.output)
    else:
        _emit(result.to_text() + "\n", args.output)
    return 0


def cmd_adjust(args, argv) -> int:
    data, covariates, dropped = load_csv(args.input, args.response, [args.response], args.covariates)
    with open(args.input, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    resp = header.index(args.response)
    needed = [header.index(c) for c in [args.response, *args.covariates]]
    resid = adjust_covariates(data.y, covariates)
    it = iter(resid.tolist())
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record in rows[1:]:
            if not record:
                continue
            if any(record[i].strip().lower() in MISSING for i in needed):
                continue
            record = list(record)
            record[resp] = repr(next(it))
            writer.writerow(record)
    return 0


def _parse_sim_features(items) -> list[int]:
    out = []
    for item in items:
        label = item[1:] if item[:1] in ("X", "x") else item
        try:
            j = int(label)
        except ValueError:
            raise UsageError(f"unknown feature {item!r}; use 1..6 or X1..X6") from None
        if not 1 <= j <= 6:
            raise UsageError(f"feature {item!r} out of range 1..6")
        out.append(j - 1)
    return out


def cmd_simulate(args, argv) -> int:
    _check_level(args.level)
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    if any(n < 1 for n in args.n):
        raise UsageError("--n must be positive")
    unknown = set(args.methods) - set(METHODS)
    if unknown:
        raise UsageError(f"unknown method(s) {sorted(unknown)}; choose from {list(METHODS)}")
    features = _parse_sim_features(args.features)
    null_cfg, alt_cfg = _configs(args)
    reports = [
        run_mc(n, args.reps, args.level, features, args.seed, args.methods,
               (null_cfg, alt_cfg), args.width, args.workers)
        for n in args.n
    ]
    if args.format == "json":
        extra = {"reports": [r.to_dict() for r in reports]}
        _emit(_dump({"manifest": _manifest(args, argv, extra), "results": report_records(reports)}), args.output)
    else:
        _emit(table_report(reports) + "\n", args.output)
    return 0


COMMANDS = {"test": cmd_test, "scan": cmd_scan, "adjust": cmd_adjust, "simulate": cmd_simulate}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="sqlr: %(levelname)s: %(message)s")
    logging.captureWarnings(True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"sqlr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateFitError, RankDeficientError, FloatingPointError) as exc:
        print(f"sqlr: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, FileNotFoundError, ValueError) as exc:
        print(f"sqlr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
