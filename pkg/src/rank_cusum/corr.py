"""Correlation estimators and their sequential prefix paths.

Every path stores one estimate per prefix length ``k``; entry ``k = n`` is the
full-sample estimate. Kendall's tau is computed from exact integer
concordance counts, so the fast single-shot value, the brute-force oracle and
the last entry of the prefix path agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.stats import rankdata

from .series import BivariateSeries, InvalidInputError, as_series, require_length

StatisticName = Literal["kendall", "pearson", "spearman_s", "spearman_r"]

# rows * n elements per block when building the prefix comparison matrix
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class ConcordanceCount:
    """Concordant and discordant pair counts; tied pairs fall in neither set."""

    concordant: int
    discordant: int
    pairs: int

    @property
    def tau(self) -> float:
        if self.pairs == 0:
            return 0.0
        return (self.concordant - self.discordant) / self.pairs


@dataclass(frozen=True, eq=False)
class CorrelationPath:
    """Prefix estimates ``values[k]`` for ``k = k_min..n``.

    ``values`` is stored densely with ``values[0]`` belonging to ``k = k_min``.
    Undefined prefixes (zero variance for Pearson) are NaN.
    """

    statistic: StatisticName
    values: np.ndarray
    k_min: int

    @property
    def n(self) -> int:
        return self.k_min + len(self.values) - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.n + 1)

    def at(self, k: int) -> float:
        if not self.k_min <= k <= self.n:
            raise IndexError(f"k={k} outside {self.k_min}..{self.n}")
        return float(self.values[k - self.k_min])

    @property
    def final(self) -> float:
        return float(self.values[-1])


class FenwickTree:
    """Binary indexed tree of integer counts over positions ``0..size-1``."""

    def __init__(self, size: int):
        self.size = size
        self._tree = [0] * (size + 1)

    def add(self, pos: int, amount: int = 1) -> None:
        i = pos + 1
        tree = self._tree
        while i <= self.size:
            tree[i] += amount
            i += i & -i

    def prefix_sum(self, pos: int) -> int:
        """Sum of counts at positions ``0..pos`` inclusive."""
        i = pos + 1
        tree = self._tree
        total = 0
        while i > 0:
            total += tree[i]
            i -= i & -i
        return total


def _dense_ranks(values: np.ndarray) -> np.ndarray:
    return np.unique(values, return_inverse=True)[1].ravel()


def _tied_pairs(labels: np.ndarray) -> int:
    counts = np.unique(labels, return_counts=True)[1].astype(np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def concordance_counts(series: BivariateSeries) -> ConcordanceCount:
    """Count concordant and discordant pairs in ``O(n log n)``.

    Discordant pairs are counted with a Fenwick tree over y-ranks while
    sweeping the points in increasing x, one tie group at a time. Concordant
    pairs follow from the tie counts by inclusion-exclusion.
    """
    series = as_series(series)
    n = series.n
    pairs = n * (n - 1) // 2
    rx = _dense_ranks(series.xs)
    ry = _dense_ranks(series.ys)
    order = np.lexsort((ry, rx))
    rx_sorted = rx[order].tolist()
    ry_sorted = ry[order].tolist()

    tree = FenwickTree(int(ry.max()) + 1)
    discordant = 0
    inserted = 0
    start = 0
    while start < n:
        stop = start
        while stop < n and rx_sorted[stop] == rx_sorted[start]:
            stop += 1
        group = ry_sorted[start:stop]
        for r in group:
            # earlier points with strictly smaller x and strictly larger y
            discordant += inserted - tree.prefix_sum(r)
        for r in group:
            tree.add(r)
        inserted += stop - start
        start = stop

    tied_x = _tied_pairs(rx)
    tied_y = _tied_pairs(ry)
    tied_xy = _tied_pairs(rx * (int(ry.max()) + 1) + ry)
    concordant = pairs - tied_x - tied_y + tied_xy - discordant
    return ConcordanceCount(concordant, discordant, pairs)


def kendall_tau(series: BivariateSeries) -> float:
    """Sample Kendall's tau, ``(C - D) / (n(n-1)/2)``, in ``O(n log n)``."""
    series = as_series(series)
    require_length(series, 2)
    return concordance_counts(series).tau


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def concordance_counts_naive(series: BivariateSeries) -> ConcordanceCount:
    series = as_series(series)
    xs, ys = series.xs.tolist(), series.ys.tolist()
    n = len(xs)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            # product of signs; the product of differences can underflow
            prod = _sign(xs[j] - xs[i]) * _sign(ys[j] - ys[i])
            if prod > 0:
                concordant += 1
            elif prod < 0:
                discordant += 1
    return ConcordanceCount(concordant, discordant, n * (n - 1) // 2)


def kendall_tau_naive(series: BivariateSeries) -> float:
    """Kendall's tau by direct enumeration of all pairs (test oracle)."""
    series = as_series(series)
    require_length(series, 2)
    return concordance_counts_naive(series).tau


def _prefix_net_concordance(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """``net[k]`` = concordant minus discordant pairs among the first ``k+1`` points."""
    n = len(xs)
    added = np.zeros(n, dtype=np.int64)
    rows = max(1, _BLOCK_ELEMENTS // max(n, 1))
    for a in range(1, n, rows):
        b = min(n, a + rows)
        gx = xs[a:b, None] > xs[None, :b]
        lx = xs[a:b, None] < xs[None, :b]
        gy = ys[a:b, None] > ys[None, :b]
        ly = ys[a:b, None] < ys[None, :b]
        # only comparisons with earlier points j < k
        earlier = np.arange(b - a)[:, None] + a > np.arange(b)[None, :]
        conc = ((gx & gy) | (lx & ly)) & earlier
        disc = ((gx & ly) | (lx & gy)) & earlier
        added[a:b] = conc.sum(axis=1, dtype=np.int64) - disc.sum(axis=1, dtype=np.int64)
    return np.cumsum(added)


def kendall_path(series: BivariateSeries) -> CorrelationPath:
    """Kendall's tau of every prefix, ``k = 2..n``.

    Point ``k`` is compared with the ``k - 1`` earlier points, so the total cost
    is ``O(n^2)`` (done in row blocks with numpy).
    """
    series = as_series(series)
    require_length(series, 2)
    net = _prefix_net_concordance(series.xs, series.ys)
    k = np.arange(2, series.n + 1, dtype=np.int64)
    values = net[1:] / (k * (k - 1) // 2)
    return CorrelationPath("kendall", values, 2)


def pearson_path(series: BivariateSeries) -> CorrelationPath:
    """Sample moment correlation of every prefix, ``k = 2..n``, from running sums.

    Prefixes where either margin is constant are reported as NaN.
    """
    series = as_series(series)
    require_length(series, 2)
    # shifting by the first observation keeps constant prefixes exactly constant
    x = series.xs - series.xs[0]
    y = series.ys - series.ys[0]
    k = np.arange(1, series.n + 1, dtype=float)
    sx, sy = np.cumsum(x), np.cumsum(y)
    sxx, syy, sxy = np.cumsum(x * x), np.cumsum(y * y), np.cumsum(x * y)
    cov = k * sxy - sx * sy
    vx = k * sxx - sx * sx
    vy = k * syy - sy * sy
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cov / np.sqrt(vx * vy)
    r[(vx <= 0) | (vy <= 0)] = np.nan
    r = np.clip(r, -1.0, 1.0)
    return CorrelationPath("pearson", r[1:], 2)


def pearson(series: BivariateSeries) -> float:
    return pearson_path(series).final


def spearman_s_path(series: BivariateSeries) -> CorrelationPath:
    """Copula-type Spearman path with ranks taken from the full sample.

    ``s_k = 12 / (k n^2) * sum_{i<=k} R_n(X_i) R_n(Y_i) - 3 - 12/n`` for
    ``k = 1..n``, with mid-ranks for ties. Because the ranks are global, the
    prefix values are biased for small ``k``; only their deviations from the
    full-sample value enter the test.
    """
    series = as_series(series)
    n = series.n
    prod = rankdata(series.xs) * rankdata(series.ys)
    k = np.arange(1, n + 1, dtype=float)
    values = 12.0 * np.cumsum(prod) / (k * n * n) - 3.0 - 12.0 / n
    return CorrelationPath("spearman_s", values, 1)


def spearman_r(series: BivariateSeries) -> float:
    """Classical Spearman rank correlation with mid-ranks."""
    series = as_series(series)
    require_length(series, 2)
    n = series.n
    s = float(np.sum(rankdata(series.xs) * rankdata(series.ys)))
    return 12.0 * s / ((n - 1) * n * (n + 1)) - 3.0 * (n + 1) / (n - 1)


def spearman_r_path(series: BivariateSeries) -> CorrelationPath:
    """Spearman's rho of every prefix with prefix ranks, ``k = 2..n``.

    Utility only; ``O(n^2 log n)``. No calibrated test is built on it.
    """
    series = as_series(series)
    require_length(series, 2)
    values = [spearman_r(series.head(k)) for k in range(2, series.n + 1)]
    return CorrelationPath("spearman_r", np.asarray(values), 2)


def correlation_path(series: BivariateSeries, statistic: StatisticName) -> CorrelationPath:
    builders = {
        "kendall": kendall_path,
        "pearson": pearson_path,
        "spearman_s": spearman_s_path,
        "spearman_r": spearman_r_path,
    }
    try:
        return builders[statistic](series)
    except KeyError:
        raise InvalidInputError(f"unknown statistic {statistic!r}") from None
