"""Data-generating models and Monte Carlo experiment runners.

Innovations are i.i.d. centered elliptical pairs (bivariate normal or
bivariate t with shape correlation ``rho``), optionally passed through a
bivariate AR(1) filter. Model 1 is ``phi = 0``, Model 2 is ``phi = 0.8``.

Random numbers come from numpy's PCG64. Every replicate draws from its own
substream derived from ``(seed, scenario index, replicate index)`` through
:class:`numpy.random.SeedSequence`, so results do not depend on how
replicates are scheduled over worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Optional, Sequence

import numpy as np
from scipy import integrate, signal, stats

from .cptest import (
    TESTS,
    ChangeModelParams,
    cusum_process,
    identifiability_condition,
    kendall_statistic,
    kolmogorov_cdf,
    locate_change,
    tau_from_rho,
)
from .lrv import LrvConfig
from .series import BivariateSeries, DegenerateVarianceError, InvalidInputError

Family = Literal["normal", "t"]

MODEL_PHI = {1: 0.0, 2: 0.8}
TABLE_DISTRIBUTIONS = ("normal", "t20", "t5", "t3", "t1")
TABLE_JUMPS = (0.4, 0.2, 0.6, 0.0, 0.8, -0.2, -0.4)  # second-half rho, first half 0.4
TABLE_TESTS = ("pearson", "spearman_copula", "kendall")
DEFAULT_BURN_IN = 1000


# --------------------------------------------------------------------------
# random streams and workers


def substream(seed: int, *indices: int) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, *indices)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(indices))))


def worker_count(workers: Optional[int] = None) -> int:
    """Number of worker processes; ``RANK_CUSUM_THREADS`` caps it (0 = all CPUs)."""
    if workers is None:
        workers = int(os.environ.get("RANK_CUSUM_THREADS", "0") or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return max(1, workers)


def _run_tasks(func: Callable, tasks: Sequence, workers: Optional[int]) -> list:
    workers = worker_count(workers)
    if workers == 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def _chunks(reps: int, size: int) -> list[range]:
    return [range(a, min(reps, a + size)) for a in range(0, reps, size)]


# --------------------------------------------------------------------------
# innovations and models


@dataclass(frozen=True)
class InnovationSpec:
    """Centered elliptical pair with unit scales and shape correlation ``rho``.

    ``family="t"`` with ``df=1`` is the bivariate Cauchy distribution.
    """

    family: Family = "normal"
    df: float = math.inf
    rho: float = 0.0

    def __post_init__(self):
        if self.family not in ("normal", "t"):
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.family == "t" and not self.df > 0:
            raise InvalidInputError("df must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidInputError("rho must lie in [-1, 1]")

    @property
    def label(self) -> str:
        return "normal" if self.family == "normal" else f"t{self.df:g}"

    @classmethod
    def parse(cls, label: str, rho: float = 0.0) -> "InnovationSpec":
        """``"normal"`` or ``"t<df>"``, e.g. ``"t5"``."""
        if label == "normal":
            return cls("normal", math.inf, rho)
        if label.startswith("t"):
            try:
                return cls("t", float(label[1:]), rho)
            except ValueError:
                pass
        raise InvalidInputError(f"unknown distribution label {label!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Innovation regime switch at observed index ``floor(change_fraction * n)``."""

    innovation_first_half: InnovationSpec
    innovation_second_half: InnovationSpec
    phi: float = 0.0
    n: int = 500
    change_fraction: float = 0.5
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise InvalidInputError("n must be at least 4")
        if self.burn_in < 0:
            raise InvalidInputError("burn_in must be non-negative")
        if not 0.0 < self.change_fraction < 1.0:
            raise InvalidInputError("change_fraction must lie in (0, 1)")
        if not abs(self.phi) < 1.0:
            raise InvalidInputError("|phi| must be below 1")

    @property
    def change_index(self) -> int:
        """Number of observations generated before the switch."""
        return math.floor(self.change_fraction * self.n)

    @classmethod
    def jump(cls, model: int, distribution: str, rho1: float, rho2: float, n: int, **kw) -> "ScenarioSpec":
        return cls(
            InnovationSpec.parse(distribution, rho1),
            InnovationSpec.parse(distribution, rho2),
            phi=MODEL_PHI[model],
            n=n,
            **kw,
        )


def sample_innovations(spec: InnovationSpec, n: int, rng: np.random.Generator) -> BivariateSeries:
    """Draw ``n`` i.i.d. elliptical pairs.

    The normal pair is ``(z1, rho z1 + sqrt(1 - rho^2) z2)``, the Cholesky
    factor of the shape matrix applied to standard normals. For the t family
    both components are divided by one shared ``sqrt(W / df)``, ``W ~ chi2(df)``.
    """
    z = rng.standard_normal((n, 2))
    x = z[:, 0]
    y = spec.rho * z[:, 0] + math.sqrt(1.0 - spec.rho * spec.rho) * z[:, 1]
    if spec.family == "t":
        scale = np.sqrt(rng.chisquare(spec.df, size=n) / spec.df)
        x = x / scale
        y = y / scale
    return BivariateSeries(x, y)


def ar1_filter(innovations: BivariateSeries, phi: float, burn_in: int = DEFAULT_BURN_IN) -> BivariateSeries:
    """``(X_i, Y_i) = phi (X_{i-1}, Y_{i-1}) + innovation_i`` from a zero start.

    The first ``burn_in`` outputs are dropped.
    """
    if not abs(phi) < 1.0:
        raise InvalidInputError("|phi| must be below 1")
    if not 0 <= burn_in < innovations.n:
        raise InvalidInputError("burn_in must leave at least one observation")
    if phi == 0.0:
        return BivariateSeries(innovations.xs[burn_in:], innovations.ys[burn_in:])
    coeffs = ([1.0], [1.0, -phi])
    x = signal.lfilter(*coeffs, innovations.xs)
    y = signal.lfilter(*coeffs, innovations.ys)
    return BivariateSeries(x[burn_in:], y[burn_in:])


def scenario_series(spec: ScenarioSpec, rng: Optional[np.random.Generator] = None) -> BivariateSeries:
    """One path of the scenario; the regime switch is placed in the innovations.

    Observed index ``change_index`` (0-based) is the first output driven by a
    second-regime innovation. Without ``rng`` the stream is seeded by ``spec.seed``.
    """
    if rng is None:
        rng = substream(spec.seed)
    head = spec.burn_in + spec.change_index
    first = sample_innovations(spec.innovation_first_half, head, rng)
    second = sample_innovations(spec.innovation_second_half, spec.n - spec.change_index, rng)
    innov = BivariateSeries(np.concatenate([first.xs, second.xs]), np.concatenate([first.ys, second.ys]))
    return ar1_filter(innov, spec.phi, spec.burn_in)


# --------------------------------------------------------------------------
# closed-form long-run variances (Gaussian margins, rho = 0)
#
# These refer to the Hoeffding linear part h1 = 2 psi of the Kendall kernel.
# The Kendall test normalizes with the long-run deviation of psi, which is
# half the square root of these values.


def model1_dsq() -> float:
    return 1.0 / 9.0


def model2_dsq(phi: float = 0.8) -> float:
    """``1/9 + (8/pi^2) sum_{j>=1} arcsin^2(phi^j / 2)``."""
    total = 0.0
    j = 1
    while True:
        term = math.asin(phi**j / 2.0) ** 2
        total += term
        if term < 1e-16:
            break
        j += 1
    return 1.0 / 9.0 + 8.0 / math.pi**2 * total


def model_dsq(model: int) -> float:
    return model1_dsq() if model == 1 else model2_dsq(MODEL_PHI[model])


# --------------------------------------------------------------------------
# change-model parameters implied by an elliptical jump


def change_params(first: InnovationSpec, second: InnovationSpec, change_fraction: float = 0.5) -> ChangeModelParams:
    """Kendall's taus ``tau_F``, ``tau_G`` and the cross term ``tau_FG`` of a jump.

    For a normal jump the difference of two independent draws is normal with
    correlation ``(rho1 + rho2)/2``. For two t regimes with a common ``df``
    it is a Gaussian scale mixture whose correlation is
    ``rho2 + (rho1 - rho2) w`` with ``w ~ Beta(df/2, df/2)``, and ``tau_FG``
    is the average of the arcsine law over ``w``.
    """
    tau_f, tau_g = tau_from_rho(first.rho), tau_from_rho(second.rho)
    if first.family != second.family or first.df != second.df:
        raise InvalidInputError("cross term only available for a common distribution family")
    if first.family == "normal":
        tau_fg = tau_from_rho((first.rho + second.rho) / 2.0)
    else:
        beta = stats.beta(first.df / 2.0, first.df / 2.0)

        def integrand(w):
            r = np.clip(second.rho + (first.rho - second.rho) * w, -1.0, 1.0)
            return 2.0 / math.pi * math.asin(r) * beta.pdf(w)

        tau_fg = integrate.quad(integrand, 0.0, 1.0)[0]
    return ChangeModelParams(change_fraction, tau_f, tau_g, float(np.clip(tau_fg, -1.0, 1.0)))


# --------------------------------------------------------------------------
# Objective A: convergence to the Kolmogorov law


def sup_distance(samples: np.ndarray, cdf: Callable[[float], float] = kolmogorov_cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical cdf of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = len(x)
    if m == 0:
        return float("nan")
    f = np.array([cdf(v) for v in x])
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - f), np.max(f - (i - 1) / m)))


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    """Sorted samples of ``T_n/(4 D_n)`` (estimated) and ``T_n/(4 D)`` (known)."""

    model: int
    n: int
    estimated: np.ndarray
    known: np.ndarray
    sup_estimated: float
    sup_known: float


def _convergence_task(task) -> list[tuple[float, float]]:
    model, n, seed, scenario, reps, config = task
    d_psi = math.sqrt(model_dsq(model)) / 2.0
    spec = ScenarioSpec.jump(model, "normal", 0.0, 0.0, n)
    out = []
    for r in reps:
        series = scenario_series(spec, substream(seed, scenario, r))
        path, lrv = kendall_statistic(series, config)
        t_n = cusum_process(path).t_n
        est = t_n / (4.0 * lrv.d) if lrv.d > 0 else math.inf
        out.append((est, t_n / (4.0 * d_psi)))
    return out


def run_convergence_experiment(
    model: int,
    n_list: Iterable[int] = (10, 20, 50, 100, 500, 1000),
    reps: int = 5000,
    seed: int = 0,
    config: LrvConfig = LrvConfig(),
    workers: Optional[int] = None,
) -> list[ConvergenceResult]:
    """Null distribution of the Kendall statistic at independent Gaussian margins.

    The known-variance version divides by ``4 D`` with ``D`` the closed-form
    long-run deviation of ``psi`` (``sqrt(model_dsq(model)) / 2``).
    """
    results = []
    for scenario, n in enumerate(n_list):
        tasks = [(model, n, seed, scenario, chunk, config) for chunk in _chunks(reps, 250)]
        pairs = [p for part in _run_tasks(_convergence_task, tasks, workers) for p in part]
        est = np.sort(np.array([p[0] for p in pairs], dtype=float))
        known = np.sort(np.array([p[1] for p in pairs], dtype=float))
        results.append(ConvergenceResult(model, n, est, known, sup_distance(est), sup_distance(known)))
    return results


# --------------------------------------------------------------------------
# Objective B: rejection frequencies


def jump_label(rho2: float, rho1: float = 0.4) -> str:
    d = round(rho2 - rho1, 10)
    return "none" if d == 0 else f"{d:+.1f}".replace("0.", ".")


@dataclass(frozen=True)
class RejectionTableRow:
    distribution: str
    test: str
    jumps: tuple[float, ...]
    frequencies: tuple[float, ...]
    replications: int
    level: float

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(jump_label(j) for j in self.jumps)

    def frequency(self, label: str) -> float:
        return self.frequencies[self.labels.index(label)]


def _rejection_task(task) -> list[tuple[bool, ...]]:
    spec, tests, level, config, seed, scenario, reps = task
    out = []
    for r in reps:
        series = scenario_series(spec, substream(seed, scenario, r))
        decisions = []
        for name in tests:
            try:
                decisions.append(TESTS[name](series, config, level).reject)
            except DegenerateVarianceError:
                decisions.append(False)
        out.append(tuple(decisions))
    return out


def run_rejection_table(
    model: int,
    distributions: Sequence[str] = TABLE_DISTRIBUTIONS,
    jumps: Sequence[float] = TABLE_JUMPS,
    n: int = 500,
    reps: int = 1000,
    level: float = 0.05,
    seed: int = 0,
    tests: Sequence[str] = TABLE_TESTS,
    rho1: float = 0.4,
    config: LrvConfig = LrvConfig(),
    workers: Optional[int] = None,
) -> list[RejectionTableRow]:
    """Empirical rejection frequencies, one row per (distribution, test).

    ``jumps`` are second-half shape correlations; the first half uses
    ``rho1``. All tests see the same simulated series in every replicate.
    Scenario indices are ``d * len(jumps) + j`` for distribution ``d`` and jump ``j``.
    """
    for name in tests:
        if name not in TESTS:
            raise InvalidInputError(f"unknown test {name!r}")
    tasks, owners = [], []
    for d, dist in enumerate(distributions):
        for j, rho2 in enumerate(jumps):
            spec = ScenarioSpec.jump(model, dist, rho1, rho2, n)
            scenario = d * len(jumps) + j
            for chunk in _chunks(reps, 100):
                tasks.append((spec, tuple(tests), level, config, seed, scenario, chunk))
                owners.append((d, j))
    counts = np.zeros((len(distributions), len(jumps), len(tests)), dtype=np.int64)
    for (d, j), part in zip(owners, _run_tasks(_rejection_task, tasks, workers)):
        counts[d, j] += np.sum(np.asarray(part, dtype=bool).reshape(-1, len(tests)), axis=0)
    rows = []
    for d, dist in enumerate(distributions):
        for t, name in enumerate(tests):
            freqs = tuple(float(c) / reps if reps else float("nan") for c in counts[d, :, t])
            rows.append(RejectionTableRow(dist, name, tuple(jumps), freqs, reps, level))
    return rows


# --------------------------------------------------------------------------
# change-point location


@dataclass(frozen=True, eq=False)
class LocatorSummary:
    spec: ScenarioSpec
    replications: int
    errors: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def median(self) -> float:
        return float(np.median(self.errors))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.errors, q))


def _locator_task(task) -> list[float]:
    spec, seed, scenario, reps = task
    lam = spec.change_fraction
    out = []
    for r in reps:
        est = locate_change(scenario_series(spec, substream(seed, scenario, r)))
        out.append(abs(est.lambda_hat - lam))
    return out


def run_locator_experiment(
    specs: Sequence[ScenarioSpec],
    reps: int = 200,
    seed: int = 0,
    workers: Optional[int] = None,
) -> list[LocatorSummary]:
    """Distribution of ``|lambda_hat - lambda_star|`` for each scenario.

    Raises
    ------
    InvalidInputError
        If a scenario has no change in tau or violates the identifiability
        condition for the implied ``(tau_F, tau_G, tau_FG)``.
    """
    for spec in specs:
        params = change_params(spec.innovation_first_half, spec.innovation_second_half, spec.change_fraction)
        if not identifiability_condition(params):
            raise InvalidInputError(f"identifiability condition fails for {params}")
    tasks, owners = [], []
    for s, spec in enumerate(specs):
        for chunk in _chunks(reps, 50):
            tasks.append((spec, seed, s, chunk))
            owners.append(s)
    errors: list[list[float]] = [[] for _ in specs]
    for s, part in zip(owners, _run_tasks(_locator_task, tasks, workers)):
        errors[s].extend(part)
    return [LocatorSummary(spec, reps, np.asarray(e)) for spec, e in zip(specs, errors)]
