import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rank_cusum.corr import kendall_tau
from rank_cusum.ecdf import (
    joint_ecdf_at_sample,
    joint_ecdf_at_sample_naive,
    marginal_ecdf_at_sample,
    psi_hat,
)
from rank_cusum.series import BivariateSeries, InvalidInputError
from rank_cusum.simulate import InnovationSpec, sample_innovations, substream

small_ints = st.integers(min_value=0, max_value=6).map(float)
floats = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@st.composite
def series(draw, elements=st.one_of(small_ints, floats), max_size=50):
    n = draw(st.integers(min_value=1, max_value=max_size))
    xs = draw(st.lists(elements, min_size=n, max_size=n))
    ys = draw(st.lists(elements, min_size=n, max_size=n))
    return BivariateSeries(xs, ys)


def test_joint_comonotone():
    np.testing.assert_allclose(joint_ecdf_at_sample(BivariateSeries([1, 2, 3], [1, 2, 3])), [1 / 3, 2 / 3, 1])


def test_joint_antitone_pair():
    np.testing.assert_allclose(joint_ecdf_at_sample(BivariateSeries([1, 2], [2, 1])), [0.5, 0.5])


def test_joint_at_componentwise_maximum():
    s = BivariateSeries([3, 1, 9, 2], [5, 8, 9, 0])
    assert joint_ecdf_at_sample(s)[2] == 1.0


@pytest.mark.parametrize(
    "values, expected",
    [((10, 20, 30), (1 / 3, 2 / 3, 1)), ((5, 5), (1, 1)), ((3, 1, 2), (1, 1 / 3, 2 / 3))],
)
def test_marginal(values, expected):
    np.testing.assert_allclose(marginal_ecdf_at_sample(values), expected)


@settings(max_examples=300, deadline=None)
@given(series())
def test_joint_fast_equals_naive(s):
    np.testing.assert_array_equal(joint_ecdf_at_sample(s), joint_ecdf_at_sample_naive(s))


def test_psi_comonotone_is_zero():
    s = BivariateSeries([1, 2, 3], [1, 2, 3])
    psi = psi_hat(s, 1.0, demean=False)
    np.testing.assert_array_equal(psi.values, 0.0)
    assert not psi.demeaned


def test_psi_rejects_bad_tau():
    with pytest.raises(InvalidInputError):
        psi_hat(BivariateSeries([1, 2], [1, 2]), 1.5)


@settings(max_examples=100, deadline=None)
@given(series(max_size=40))
def test_psi_demeaned_and_bounded(s):
    tau = kendall_tau(s) if s.n > 1 else 0.0
    raw = psi_hat(s, tau, demean=False).values
    assert np.all(raw >= -3) and np.all(raw <= 3)
    centered = psi_hat(s, tau)
    assert abs(centered.values.mean()) < 1e-12
    assert np.all(np.abs(centered.values) <= 6)


@settings(max_examples=100, deadline=None)
@given(series(elements=floats, max_size=40))
def test_psi_monotone_invariance(s):
    dense_x = np.unique(s.xs, return_inverse=True)[1].ravel()
    t = BivariateSeries(np.exp(dense_x / 7.0), 4.0 * s.ys)
    tau = kendall_tau(s) if s.n > 1 else 0.0
    np.testing.assert_array_equal(psi_hat(s, tau).values, psi_hat(t, tau).values)


def test_psi_centering_has_mean_zero_at_independence():
    rng = np.random.default_rng(2024)
    n = 100_000
    s = BivariateSeries(rng.uniform(size=n), rng.uniform(size=n))
    psi = psi_hat(s, kendall_tau(s), demean=False)
    # sd of the mean is about sqrt(1/36 / n) = 5e-4; 1 - tau centering would give 1/4
    assert abs(psi.values.mean()) < 5e-3


def asv_tau_normal(rho):
    """Delta method on ASV(sin(pi tau/2)) = (1-rho^2)(pi^2/9 - 4 asin^2(rho/2))."""
    return 4 / 9 - 16 / math.pi**2 * math.asin(rho / 2) ** 2


@pytest.mark.slow
def test_hoeffding_variance_identity():
    rho = 0.4
    spec = InnovationSpec("normal", math.inf, rho)
    big = sample_innovations(spec, 100_000, substream(7, 0))
    var_psi = psi_hat(big, kendall_tau(big), demean=True).values.var()
    assert 16 * var_psi == pytest.approx(asv_tau_normal(rho), rel=0.02)

    n, reps = 200, 2000
    taus = np.array([kendall_tau(sample_innovations(spec, n, substream(7, 1, r))) for r in range(reps)])
    # SE of a variance from 2000 replicates is about 3%
    assert n * taus.var() == pytest.approx(16 * var_psi, rel=0.08)
