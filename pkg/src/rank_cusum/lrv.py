"""Kernel weights, the bandwidth rule and the HAC long-run variance estimator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Union

import numpy as np

from .ecdf import PsiValues
from .series import DegenerateVarianceError, InvalidInputError

KernelKind = Literal["quartic", "bartlett"]
Fallback = Literal["clamp_to_lag0", "error"]


def kernel_quartic(x: float) -> float:
    """Quartic (biweight) kernel ``(1 - x^2)^2`` on ``[0, 1]``, zero beyond."""
    if x < 0:
        raise InvalidInputError("kernel argument must be non-negative")
    if x > 1:
        return 0.0
    return (1.0 - x * x) ** 2


def kernel_bartlett(x: float) -> float:
    if x < 0:
        raise InvalidInputError("kernel argument must be non-negative")
    return max(1.0 - x, 0.0)


_KERNELS: dict[str, Callable[[float], float]] = {
    "quartic": kernel_quartic,
    "bartlett": kernel_bartlett,
}


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = "quartic"
    weight: Callable[[float], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KERNELS:
            raise InvalidInputError(f"unknown kernel {self.kind!r}")
        object.__setattr__(self, "weight", _KERNELS[self.kind])

    def __call__(self, x: float) -> float:
        return self.weight(x)


@dataclass(frozen=True)
class LrvConfig:
    """Settings for :func:`lrv_estimate`.

    ``bandwidth`` is a positive integer or ``"auto"`` for ``floor(2 n^(1/3))``.
    """

    kernel: KernelSpec = field(default_factory=KernelSpec)
    bandwidth: Union[int, Literal["auto"]] = "auto"
    demean: bool = True
    fallback: Fallback = "clamp_to_lag0"

    def __post_init__(self):
        if isinstance(self.kernel, str):
            object.__setattr__(self, "kernel", KernelSpec(self.kernel))
        if self.bandwidth != "auto":
            if isinstance(self.bandwidth, bool) or not isinstance(self.bandwidth, (int, np.integer)):
                raise InvalidInputError(f"bandwidth must be a positive integer or 'auto', got {self.bandwidth!r}")
            if self.bandwidth < 1:
                raise InvalidInputError(f"bandwidth must be >= 1, got {self.bandwidth}")
        if self.fallback not in ("clamp_to_lag0", "error"):
            raise InvalidInputError(f"unknown fallback {self.fallback!r}")

    def bandwidth_for(self, n: int) -> int:
        if self.bandwidth == "auto":
            return min(default_bandwidth(n), n - 1)
        return int(self.bandwidth)


@dataclass(frozen=True)
class LrvEstimate:
    d_squared: float
    d: float
    negative_flag: bool
    bandwidth_used: int


def default_bandwidth(n: int) -> int:
    """``floor(2 n^(1/3))``, at least 1, computed without floating-point cube-root error."""
    if n < 2:
        raise InvalidInputError(f"need n >= 2, got {n}")
    b = int(2.0 * np.cbrt(n))
    # exact integer correction: b <= 2 n^(1/3)  <=>  b^3 <= 8 n
    while (b + 1) ** 3 <= 8 * n:
        b += 1
    while b > 0 and b**3 > 8 * n:
        b -= 1
    return max(b, 1)


def autocovariance_sums(values: np.ndarray, max_lag: int) -> np.ndarray:
    """``sum_i v_i v_{i+j}`` for ``j = 0..max_lag``."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    return np.array([np.dot(v[: n - j], v[j:]) for j in range(max_lag + 1)])


def lrv_estimate(psi: Union[PsiValues, np.ndarray], config: LrvConfig = LrvConfig()) -> LrvEstimate:
    """Kernel (HAC) estimate of the long-run variance of ``psi``.

        D^2 = (1/n) sum_i psi_i^2 + (2/n) sum_{j=1}^{n-1} kappa(j/b) sum_i psi_i psi_{i+j}

    Both kernels vanish beyond lag ``b``, so only lags ``1..b`` are summed.
    When the raw estimate is not positive it is replaced by the lag-0 term
    (``fallback="clamp_to_lag0"``, with ``negative_flag`` set) or rejected
    (``fallback="error"``).

    Parameters
    ----------
    psi : PsiValues or array_like
        Influence values. Plain arrays are demeaned when ``config.demean`` is
        set; :class:`PsiValues` are used as generated.
    config : LrvConfig
    """
    if isinstance(psi, PsiValues):
        v = np.asarray(psi.values, dtype=float)
    else:
        v = np.asarray(psi, dtype=float)
        if config.demean:
            v = v - v.mean()
    n = len(v)
    if n < 2:
        raise InvalidInputError("need at least 2 values")
    b = config.bandwidth_for(n)
    if not 1 <= b <= n - 1:
        raise InvalidInputError(f"bandwidth {b} outside 1..{n - 1}")
    if config.bandwidth != "auto" and b > math.sqrt(n):
        warnings.warn(f"bandwidth {b} exceeds sqrt(n) = {math.sqrt(n):.1f}", stacklevel=2)

    kappa = config.kernel
    sums = autocovariance_sums(v, b)
    lag0 = sums[0] / n
    weights = np.array([kappa(j / b) for j in range(1, b + 1)])
    raw = lag0 + 2.0 / n * float(np.dot(weights, sums[1:]))

    negative = raw <= 0.0
    d_squared = raw
    if negative:
        if config.fallback == "error":
            raise DegenerateVarianceError(f"long-run variance estimate {raw:.3g} is not positive")
        d_squared = lag0
    return LrvEstimate(float(d_squared), math.sqrt(max(d_squared, 0.0)), bool(negative), b)
