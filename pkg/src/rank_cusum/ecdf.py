"""Empirical distribution functions evaluated at the sample, and influence values.

The influence values feed the long-run variance estimator of the Kendall test.
For continuous ``F`` the Hoeffding linear part of the Kendall kernel is
``h1 = 4F - 2F_X - 2F_Y + 1 - tau``; we work with ``psi = h1 / 2``, i.e.

    psi(x, y) = 2 F(x, y) - F_X(x) - F_Y(y) + (1 - tau) / 2,

which has mean zero and satisfies ``ASV(tau_hat) = 16 Var(psi)`` for i.i.d. data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corr import FenwickTree, _dense_ranks
from .series import BivariateSeries, InvalidInputError, as_series


@dataclass(frozen=True, eq=False)
class PsiValues:
    values: np.ndarray
    demeaned: bool
    tau_hat: float

    def __len__(self) -> int:
        return len(self.values)


def marginal_ecdf_at_sample(values) -> np.ndarray:
    """``(1/n) #{j : v_j <= v_i}`` for every ``i``."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    return np.searchsorted(np.sort(v), v, side="right") / n


def joint_ecdf_at_sample(series: BivariateSeries) -> np.ndarray:
    """``(1/n) #{j : X_j <= X_i, Y_j <= Y_i}`` for every ``i`` in ``O(n log n)``.

    Sweeps x tie groups in increasing order; each group is inserted into a
    Fenwick tree over y-ranks before its members are queried, so equal x
    values see each other.
    """
    series = as_series(series)
    n = series.n
    rx = _dense_ranks(series.xs)
    ry = _dense_ranks(series.ys)
    order = np.lexsort((ry, rx)).tolist()
    rx_l = rx.tolist()
    ry_l = ry.tolist()

    tree = FenwickTree(max(ry_l) + 1)
    counts = np.empty(n, dtype=np.int64)
    start = 0
    while start < n:
        stop = start
        gx = rx_l[order[start]]
        while stop < n and rx_l[order[stop]] == gx:
            tree.add(ry_l[order[stop]])
            stop += 1
        for idx in order[start:stop]:
            counts[idx] = tree.prefix_sum(ry_l[idx])
        start = stop
    return counts / n


def joint_ecdf_at_sample_naive(series: BivariateSeries) -> np.ndarray:
    """``O(n^2)`` direct count, kept as a test oracle."""
    series = as_series(series)
    x, y = series.xs, series.ys
    below = (x[None, :] <= x[:, None]) & (y[None, :] <= y[:, None])
    return below.sum(axis=1) / len(x)


def psi_hat(series: BivariateSeries, tau_hat: float, demean: bool = True) -> PsiValues:
    """Estimated influence values ``2F_n - F_{X,n} - F_{Y,n} + (1 - tau_hat)/2``.

    Raw values lie in ``[-3, 3]``. With ``demean`` the empirical mean is
    subtracted afterwards.
    """
    series = as_series(series)
    if not -1.0 <= tau_hat <= 1.0:
        raise InvalidInputError(f"tau_hat={tau_hat} outside [-1, 1]")
    values = (
        2.0 * joint_ecdf_at_sample(series)
        - marginal_ecdf_at_sample(series.xs)
        - marginal_ecdf_at_sample(series.ys)
        + (1.0 - tau_hat) / 2.0
    )
    if demean:
        values = values - values.mean()
    return PsiValues(values, demean, float(tau_hat))
