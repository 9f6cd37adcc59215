"""CUSUM change-point tests for constant correlation.

Each test computes the weighted difference process ``(k/sqrt(n)) |r_k - r_n|``
of a prefix correlation path, takes its maximum, and normalizes it by a
kernel estimate of the long-run standard deviation of the estimator's
influence values. Under the null hypothesis the normalized maximum is
asymptotically distributed as the supremum of a Brownian bridge (the
Kolmogorov distribution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional

import numpy as np
from scipy.stats import rankdata

from .corr import CorrelationPath, kendall_path, pearson_path, spearman_s_path
from .ecdf import psi_hat
from .lrv import LrvConfig, lrv_estimate
from .series import (
    BivariateSeries,
    DegenerateVarianceError,
    InvalidInputError,
    as_series,
    require_length,
)

TestKind = Literal["kendall", "pearson", "spearman_copula"]

MIN_TEST_LENGTH = 20


# --------------------------------------------------------------------------
# Kolmogorov distribution: law of sup |B(t)| for a Brownian bridge B


def _kolmogorov_small(x: float) -> float:
    # theta-function form, fast for small x
    total = 0.0
    k = 1
    c = math.pi**2 / (8.0 * x * x)
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * c)
        total += term
        if term < 1e-17 * max(total, 1e-300):
            break
        k += 1
    return math.sqrt(2.0 * math.pi) / x * total


def kolmogorov_sf(x: float) -> float:
    """``P(sup |B| > x)``."""
    if x <= 0:
        return 1.0
    if x < 1.0:
        return 1.0 - _kolmogorov_small(x)
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term < 1e-17:
            break
        total += term if k % 2 else -term
        k += 1
    return min(1.0, 2.0 * total)


def kolmogorov_cdf(x: float) -> float:
    """``K(x) = 1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`` for ``x > 0``, else 0.

    The alternating series converges slowly near zero, so for ``x < 1`` the
    equivalent theta-function series ``sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8x^2))``
    is summed instead.
    """
    if x <= 0:
        return 0.0
    if x < 1.0:
        return min(1.0, _kolmogorov_small(x))
    return 1.0 - kolmogorov_sf(x)


def kolmogorov_quantile(p: float) -> float:
    """Inverse of :func:`kolmogorov_cdf` by bisection on ``[0, 5]``."""
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must lie in (0, 1), got {p}")
    lo, hi = 0.0, 5.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if kolmogorov_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# CUSUM process and tests


class CusumProcess(NamedTuple):
    values: np.ndarray  # entry for k = k_min + index
    t_n: float
    argmax_k: int
    k_min: int


def cusum_process(path: CorrelationPath, n: Optional[int] = None) -> CusumProcess:
    """Weighted differences ``(k/sqrt(n)) |path_k - path_n|`` for ``k = k_min..n``.

    Undefined (NaN) path entries contribute 0. The argmax is the smallest
    maximizing ``k``.
    """
    n = path.n if n is None else n
    if n != path.n:
        raise InvalidInputError(f"path covers k <= {path.n}, expected n = {n}")
    ks = path.ks.astype(float)
    diff = np.abs(path.values - path.values[-1])
    process = np.where(np.isnan(diff), 0.0, ks / math.sqrt(n) * diff)
    idx = int(np.argmax(process))
    return CusumProcess(process, float(process[idx]), path.k_min + idx, path.k_min)


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of one change-point test.

    ``normalized`` is ``t_n / (4 d_hat)`` for Kendall (``d_hat`` being the
    long-run standard deviation of the influence values ``psi``) and
    ``t_n / d_hat`` for the Pearson and copula tests, whose ``d_hat`` already
    refers to the full influence function of the estimator.
    """

    statistic_kind: TestKind
    n: int
    estimate: float
    t_n: float
    d_hat: float
    normalized: float
    p_value: float
    reject: bool
    alpha: float
    process: np.ndarray = field(repr=False)
    k_min: int
    argmax_k: int
    bandwidth: int
    negative_flag: bool = False

    __test__ = False  # not a pytest class

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + len(self.process))

    def to_dict(self) -> dict:
        return {
            "statistic_kind": self.statistic_kind,
            "n": self.n,
            "estimate": self.estimate,
            "t_n": self.t_n,
            "d_hat": self.d_hat,
            "normalized": self.normalized,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "process": [float(v) for v in self.process],
            "k_min": self.k_min,
            "argmax_k": self.argmax_k,
            "bandwidth": self.bandwidth,
            "negative_flag": self.negative_flag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestResult":
        d = dict(d)
        d["process"] = np.asarray(d["process"], dtype=float)
        return cls(**d)

    def __eq__(self, other):
        if not isinstance(other, TestResult):
            return NotImplemented
        a, b = self.to_dict(), other.to_dict()
        return all(
            (a[k] == b[k]) or (isinstance(a[k], float) and math.isnan(a[k]) and math.isnan(b[k]))
            for k in a
        )


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")


def _finish(kind, path, lrv, scale, alpha, n) -> TestResult:
    proc = cusum_process(path)
    if lrv.d <= 0.0:
        raise DegenerateVarianceError(f"{kind}: long-run variance estimate is zero")
    normalized = proc.t_n / (scale * lrv.d)
    p = kolmogorov_sf(normalized)
    return TestResult(
        statistic_kind=kind,
        n=n,
        estimate=path.final,
        t_n=proc.t_n,
        d_hat=lrv.d,
        normalized=normalized,
        p_value=p,
        reject=p < alpha,
        alpha=alpha,
        process=proc.values,
        k_min=proc.k_min,
        argmax_k=proc.argmax_k,
        bandwidth=lrv.bandwidth_used,
        negative_flag=lrv.negative_flag,
    )


def kendall_statistic(series: BivariateSeries, config: LrvConfig = LrvConfig()):
    """Kendall CUSUM maximum and long-run estimate without a length floor.

    Returns ``(path, LrvEstimate)``; used by the simulation runners that also
    study very short series.
    """
    series = as_series(series)
    path = kendall_path(series)
    psi = psi_hat(series, path.final, demean=config.demean)
    return path, lrv_estimate(psi, config)


def kendall_change_test(
    series: BivariateSeries, config: LrvConfig = LrvConfig(), alpha: float = 0.05
) -> TestResult:
    """Kendall's tau CUSUM test, ``T_n / (4 D_n)`` against the Kolmogorov law.

    Raises
    ------
    DegenerateVarianceError
        If the influence values are constant (e.g. comonotone data).
    """
    series = as_series(series)
    require_length(series, MIN_TEST_LENGTH)
    _check_alpha(alpha)
    path, lrv = kendall_statistic(series, config)
    return _finish("kendall", path, lrv, 4.0, alpha, series.n)


def pearson_influence(series: BivariateSeries) -> np.ndarray:
    """Influence values of the moment correlation at the full-sample moments.

    ``u_i v_i - rho/2 (u_i^2 + v_i^2)`` with standardized margins ``u, v``.
    """
    series = as_series(series)
    x = series.xs - series.xs.mean()
    y = series.ys - series.ys.mean()
    sx, sy = math.sqrt(np.mean(x * x)), math.sqrt(np.mean(y * y))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVarianceError("pearson: a margin has zero variance")
    u, v = x / sx, y / sy
    rho = float(np.mean(u * v))
    return u * v - 0.5 * rho * (u * u + v * v)


def pearson_change_test(
    series: BivariateSeries, config: LrvConfig = LrvConfig(), alpha: float = 0.05
) -> TestResult:
    """CUSUM test on prefix moment correlations, HAC-normalized."""
    series = as_series(series)
    require_length(series, MIN_TEST_LENGTH)
    _check_alpha(alpha)
    infl = pearson_influence(series)
    path = pearson_path(series)
    lrv = lrv_estimate(infl, config)
    return _finish("pearson", path, lrv, 1.0, alpha, series.n)


def spearman_influence(series: BivariateSeries) -> np.ndarray:
    """Summands ``12 R_n(X_i) R_n(Y_i) / n^2 - 3 - s_n`` of the copula path.

    For tie-free data ``R_n / n`` is the marginal empirical distribution
    function at the sample.
    """
    series = as_series(series)
    n = series.n
    g = 12.0 * rankdata(series.xs) * rankdata(series.ys) / (n * n) - 3.0
    return g - g.mean()


def spearman_copula_change_test(
    series: BivariateSeries, config: LrvConfig = LrvConfig(), alpha: float = 0.05
) -> TestResult:
    """CUSUM test on the copula-type Spearman path (ranks from the full sample)."""
    series = as_series(series)
    require_length(series, MIN_TEST_LENGTH)
    _check_alpha(alpha)
    path = spearman_s_path(series)
    lrv = lrv_estimate(spearman_influence(series), config)
    return _finish("spearman_copula", path, lrv, 1.0, alpha, series.n)


TESTS = {
    "kendall": kendall_change_test,
    "pearson": pearson_change_test,
    "spearman_copula": spearman_copula_change_test,
}


# --------------------------------------------------------------------------
# change-point location


@dataclass(frozen=True)
class ChangePointEstimate:
    k_hat: int
    lambda_hat: float


def locate_change(series: BivariateSeries) -> ChangePointEstimate:
    """Position of the maximum of the Kendall weighted difference process."""
    series = as_series(series)
    require_length(series, 4)
    proc = cusum_process(kendall_path(series))
    return ChangePointEstimate(proc.argmax_k, proc.argmax_k / series.n)


# --------------------------------------------------------------------------
# single change-point model: mean of the prefix tau and its limit


@dataclass(frozen=True)
class ChangeModelParams:
    """Change at fraction ``lambda_star`` from tau ``tau_F`` to ``tau_G``.

    ``tau_FG`` is the expected Kendall kernel for one observation from each
    regime.
    """

    lambda_star: float
    tau_F: float
    tau_G: float
    tau_FG: float

    def __post_init__(self):
        if not 0.0 < self.lambda_star < 1.0:
            raise InvalidInputError("lambda_star must lie in (0, 1)")
        for name in ("tau_F", "tau_G", "tau_FG"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise InvalidInputError(f"{name} must lie in [-1, 1]")


def mean_tau_prefix(k: int, n: int, params: ChangeModelParams) -> float:
    """Expected prefix tau ``E tau_k`` for independent observations."""
    if not 2 <= k <= n:
        raise InvalidInputError(f"need 2 <= k <= n, got k={k}, n={n}")
    m = math.floor(params.lambda_star * n)
    if k <= m:
        return params.tau_F
    denom = k * (k - 1)
    return (
        m * (m - 1) * params.tau_F
        + (k - m) * (k - m - 1) * params.tau_G
        + 2 * m * (k - m) * params.tau_FG
    ) / denom


def _tau_limit(lam: float, p: ChangeModelParams) -> float:
    ls = p.lambda_star
    if lam <= ls:
        return p.tau_F
    return (ls * ls * p.tau_F + (lam - ls) ** 2 * p.tau_G + 2 * ls * (lam - ls) * p.tau_FG) / (lam * lam)


def c_lambda(lam: float, params: ChangeModelParams) -> float:
    """Limit ``c(lambda) = lambda (t(lambda) - t(1))`` of the scaled mean difference process.

    ``t`` is the continuum limit of :func:`mean_tau_prefix`.
    """
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError("lambda must lie in [0, 1]")
    if lam == 0.0:
        return 0.0
    return lam * (_tau_limit(lam, params) - _tau_limit(1.0, params))


def identifiability_condition(params: ChangeModelParams) -> bool:
    """Whether ``(1-l)^2 / (2((1-l)^2 + l)) <= (tau_FG - tau_F)/(tau_G - tau_F) < 1``."""
    if params.tau_F == params.tau_G:
        raise InvalidInputError("tau_F == tau_G: no change to identify")
    ls = params.lambda_star
    ratio = (params.tau_FG - params.tau_F) / (params.tau_G - params.tau_F)
    lower = (1 - ls) ** 2 / (2 * ((1 - ls) ** 2 + ls))
    return lower <= ratio < 1.0


# --------------------------------------------------------------------------
# efficiency at the normal model


def _check_unit(value: float, name: str) -> None:
    if not -1.0 <= value <= 1.0:
        raise InvalidInputError(f"{name} must lie in [-1, 1], got {value}")


def asv_pearson_normal(rho: float) -> float:
    _check_unit(rho, "rho")
    return (1.0 - rho * rho) ** 2


def asv_kendall_normal(rho: float) -> float:
    """Asymptotic variance of ``sin(pi tau_hat / 2)`` at the bivariate normal."""
    _check_unit(rho, "rho")
    return (1.0 - rho * rho) * (math.pi**2 / 9.0 - 4.0 * math.asin(rho / 2.0) ** 2)


def rho_from_tau(tau: float) -> float:
    """Elliptical correlation matching Kendall's tau, ``sin(pi tau / 2)``."""
    _check_unit(tau, "tau")
    return math.sin(math.pi * tau / 2.0)


def tau_from_rho(rho: float) -> float:
    _check_unit(rho, "rho")
    return 2.0 / math.pi * math.asin(rho)
