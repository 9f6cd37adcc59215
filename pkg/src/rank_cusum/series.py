"""Bivariate series container and the package's exception types."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DegenerateVarianceError(ArithmeticError):
    """Raised when a long-run variance estimate is zero, so a statistic cannot be normalized."""


@dataclass(frozen=True, eq=False)
class BivariateSeries:
    """Aligned observations ``(x_i, y_i)``, ``i = 1..n``.

    Parameters
    ----------
    xs, ys : array_like
        Real vectors of equal length ``n >= 1``.
    timestamps : sequence of datetime.date, optional
        Strictly increasing dates, one per observation.
    """

    xs: np.ndarray
    ys: np.ndarray
    timestamps: Optional[tuple[date, ...]] = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1:
            raise InvalidInputError("xs and ys must be one-dimensional")
        if len(xs) != len(ys):
            raise InvalidInputError(f"length mismatch: {len(xs)} xs vs {len(ys)} ys")
        if len(xs) == 0:
            raise InvalidInputError("empty series")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InvalidInputError("series contains non-finite values")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != len(xs):
                raise InvalidInputError("timestamps must have one entry per observation")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise InvalidInputError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def n(self) -> int:
        return len(self.xs)

    def head(self, k: int) -> "BivariateSeries":
        """First ``k`` observations."""
        ts = None if self.timestamps is None else self.timestamps[:k]
        return BivariateSeries(self.xs[:k], self.ys[:k], ts)

    def swapped(self) -> "BivariateSeries":
        return BivariateSeries(self.ys, self.xs, self.timestamps)


def as_series(series, ys: Optional[Sequence[float]] = None) -> BivariateSeries:
    """Coerce ``series`` (or a pair ``series, ys``) into a :class:`BivariateSeries`."""
    if isinstance(series, BivariateSeries):
        return series
    if ys is not None:
        return BivariateSeries(series, ys)
    arr = np.asarray(series, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return BivariateSeries(arr[:, 0], arr[:, 1])
    raise InvalidInputError("expected a BivariateSeries, an (n, 2) array, or xs and ys")


def require_length(series: BivariateSeries, minimum: int) -> None:
    if series.n < minimum:
        raise InvalidInputError(f"need at least {minimum} observations, got {series.n}")
