"""Sieve quasi-likelihood ratio tests with one-hidden-layer neural networks."""

__version__ = "0.1.0"

from .dataset import Dataset
from .distributions import chisq1_sf, f_sf
from .ftest import FTestResult, OlsFit, RankDeficientError, f_test_feature, ols_fit
from .lrtest import (
    DegenerateFitError,
    HypothesisSpec,
    TestOutcome,
    default_configs,
    fit_alt,
    fit_null,
    lr_statistic,
    sigma_hat_sq,
    sqlr_test,
)
from .network import (
    SieveNetwork,
    TrainConfig,
    forward,
    grad_mse,
    init_network,
    mse,
    partial_derivative,
    phi_hat,
    predict,
    project_constraints,
    project_l1,
    sigmoid_deriv_coeffs,
    sigmoid_mth_deriv,
    sup_derivative_bound,
    train,
)
from .pipeline import ScanConfig, adjust_covariates, load_csv, scale_features, scan
from .simulation import McReport, SimModel, gen_data, run_mc, table_report

__all__ = [
    "Dataset",
    "chisq1_sf",
    "f_sf",
    "FTestResult",
    "OlsFit",
    "RankDeficientError",
    "f_test_feature",
    "ols_fit",
    "DegenerateFitError",
    "HypothesisSpec",
    "TestOutcome",
    "default_configs",
    "fit_alt",
    "fit_null",
    "lr_statistic",
    "sigma_hat_sq",
    "sqlr_test",
    "SieveNetwork",
    "TrainConfig",
    "forward",
    "grad_mse",
    "init_network",
    "mse",
    "partial_derivative",
    "phi_hat",
    "predict",
    "project_constraints",
    "project_l1",
    "sigmoid_deriv_coeffs",
    "sigmoid_mth_deriv",
    "sup_derivative_bound",
    "train",
    "ScanConfig",
    "adjust_covariates",
    "load_csv",
    "scale_features",
    "scan",
    "McReport",
    "SimModel",
    "gen_data",
    "run_mc",
    "table_report",
]
