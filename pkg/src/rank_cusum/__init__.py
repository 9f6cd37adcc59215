"""Rank-based CUSUM tests for a change in the correlation of a bivariate series."""

from .corr import (
    CorrelationPath,
    correlation_path,
    kendall_path,
    kendall_tau,
    pearson,
    pearson_path,
    spearman_r,
    spearman_s_path,
)
from .cptest import (
    ChangeModelParams,
    ChangePointEstimate,
    TestResult,
    c_lambda,
    identifiability_condition,
    kendall_change_test,
    kolmogorov_cdf,
    kolmogorov_quantile,
    kolmogorov_sf,
    locate_change,
    mean_tau_prefix,
    pearson_change_test,
    spearman_copula_change_test,
)
from .ecdf import PsiValues, psi_hat
from .lrv import KernelSpec, LrvConfig, LrvEstimate, default_bandwidth, lrv_estimate
from .series import BivariateSeries, DegenerateVarianceError, InvalidInputError
from .simulate import (
    InnovationSpec,
    ScenarioSpec,
    model1_dsq,
    model2_dsq,
    run_convergence_experiment,
    run_locator_experiment,
    run_rejection_table,
    scenario_series,
    substream,
)

__version__ = "0.1.0"

__all__ = [
    "BivariateSeries",
    "ChangeModelParams",
    "ChangePointEstimate",
    "CorrelationPath",
    "DegenerateVarianceError",
    "InnovationSpec",
    "InvalidInputError",
    "KernelSpec",
    "LrvConfig",
    "LrvEstimate",
    "PsiValues",
    "ScenarioSpec",
    "TestResult",
    "c_lambda",
    "correlation_path",
    "default_bandwidth",
    "identifiability_condition",
    "kendall_change_test",
    "kendall_path",
    "kendall_tau",
    "kolmogorov_cdf",
    "kolmogorov_quantile",
    "kolmogorov_sf",
    "locate_change",
    "lrv_estimate",
    "mean_tau_prefix",
    "model1_dsq",
    "model2_dsq",
    "pearson",
    "pearson_change_test",
    "pearson_path",
    "psi_hat",
    "run_convergence_experiment",
    "run_locator_experiment",
    "run_rejection_table",
    "scenario_series",
    "spearman_copula_change_test",
    "spearman_r",
    "spearman_s_path",
    "substream",
]
