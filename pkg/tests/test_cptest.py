import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import kstwobign

from rank_cusum.corr import CorrelationPath
from rank_cusum.cptest import (
    TESTS,
    ChangeModelParams,
    TestResult,
    asv_kendall_normal,
    asv_pearson_normal,
    c_lambda,
    cusum_process,
    identifiability_condition,
    kendall_change_test,
    kolmogorov_cdf,
    kolmogorov_quantile,
    kolmogorov_sf,
    locate_change,
    mean_tau_prefix,
    pearson_change_test,
    rho_from_tau,
    spearman_copula_change_test,
    tau_from_rho,
)
from rank_cusum.series import BivariateSeries, DegenerateVarianceError, InvalidInputError
from rank_cusum.simulate import ScenarioSpec, scenario_series, substream


def scenario(rho2, n=200, seed=0, model=1, dist="normal"):
    return scenario_series(ScenarioSpec.jump(model, dist, 0.4, rho2, n), substream(seed))


def increasing(v):
    dense = np.unique(v, return_inverse=True)[1].ravel()
    return np.exp(dense / 13.0) - 2.0


class TestKolmogorov:
    def test_zero(self):
        assert kolmogorov_cdf(0.0) == 0.0
        assert kolmogorov_cdf(-1.0) == 0.0
        assert kolmogorov_sf(0.0) == 1.0

    def test_95_point(self):
        assert kolmogorov_cdf(1.3581) == pytest.approx(0.95, abs=1e-4)

    def test_far_tail(self):
        assert kolmogorov_cdf(10.0) == pytest.approx(1.0, abs=1e-12)

    def test_quantile(self):
        assert kolmogorov_quantile(0.95) == pytest.approx(1.358098, abs=1e-6)

    @pytest.mark.parametrize("p", [0.05, 0.5, 0.9, 0.95, 0.99])
    def test_round_trip(self, p):
        assert kolmogorov_cdf(kolmogorov_quantile(p)) == pytest.approx(p, abs=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, 1.5, -0.1])
    def test_quantile_domain(self, p):
        with pytest.raises(InvalidInputError):
            kolmogorov_quantile(p)

    @pytest.mark.parametrize("x", np.linspace(0.2, 3.0, 29))
    def test_matches_scipy(self, x):
        assert kolmogorov_cdf(x) == pytest.approx(kstwobign.cdf(x), abs=1e-12)
        assert kolmogorov_sf(x) == pytest.approx(kstwobign.sf(x), rel=1e-9, abs=1e-15)

    def test_branches_meet(self):
        assert kolmogorov_cdf(1.0 - 1e-12) == pytest.approx(kolmogorov_cdf(1.0), abs=1e-11)

    def test_monotone(self):
        xs = np.linspace(0.05, 4, 400)
        cdf = [kolmogorov_cdf(x) for x in xs]
        assert np.all(np.diff(cdf) >= 0)


class TestCusumProcess:
    def test_constant_path(self):
        proc = cusum_process(CorrelationPath("kendall", np.full(9, 0.3), 2))
        assert proc.t_n == 0.0
        np.testing.assert_array_equal(proc.values, 0.0)
        assert proc.argmax_k == 2

    def test_small_example(self):
        proc = cusum_process(CorrelationPath("spearman_copula", np.array([0.0, 0.0, 1.0]), 1))
        assert proc.values[1] == pytest.approx(2 / math.sqrt(3), abs=1e-15)
        assert proc.t_n == proc.values[1]
        assert proc.argmax_k == 2
        assert proc.values[-1] == 0.0

    def test_unique_max_position(self):
        values = np.zeros(19)
        values[5] = 2.0  # k = 7 with k_min = 2
        proc = cusum_process(CorrelationPath("kendall", values, 2))
        assert proc.argmax_k == 7
        assert proc.t_n == 7 / math.sqrt(20) * 2.0

    def test_ties_take_smallest(self):
        # k |d_k| is exactly 2/sqrt(5) at k = 2 and k = 4
        values = np.array([1.0, 0.0, 0.5, 0.0])
        proc = cusum_process(CorrelationPath("kendall", values, 2))
        assert proc.argmax_k == 2

    def test_nan_counts_as_zero(self):
        proc = cusum_process(CorrelationPath("pearson", np.array([np.nan, 0.2, 0.1]), 2))
        assert proc.values[0] == 0.0

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            cusum_process(CorrelationPath("kendall", np.zeros(5), 2), n=10)


class TestDegenerate:
    def test_comonotone_kendall(self):
        x = np.arange(50.0)
        with pytest.raises(DegenerateVarianceError):
            kendall_change_test(BivariateSeries(x, 2 * x + 1))

    def test_constant_margin_pearson(self):
        with pytest.raises(DegenerateVarianceError):
            pearson_change_test(BivariateSeries(np.ones(30), np.arange(30.0)))

    def test_constant_ranks_copula(self):
        with pytest.raises(DegenerateVarianceError):
            spearman_copula_change_test(BivariateSeries(np.ones(30), np.ones(30)))

    @pytest.mark.parametrize("name", sorted(TESTS))
    def test_too_short(self, name):
        with pytest.raises(InvalidInputError):
            TESTS[name](scenario(0.4, n=19))

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
    def test_bad_alpha(self, alpha):
        with pytest.raises(InvalidInputError):
            kendall_change_test(scenario(0.4), alpha=alpha)


class TestResults:
    @pytest.mark.parametrize("name", sorted(TESTS))
    def test_invariants(self, name):
        res = TESTS[name](scenario(-0.4, n=300, seed=3))
        assert res.t_n == res.process.max()
        assert res.process[res.argmax_k - res.k_min] == res.t_n
        assert res.p_value == pytest.approx(1.0 - kolmogorov_cdf(res.normalized), abs=1e-12)
        assert res.reject == (res.p_value < res.alpha)
        assert res.ks[0] == res.k_min and res.ks[-1] == res.n

    def test_kendall_normalization(self):
        res = kendall_change_test(scenario(0.0, seed=1))
        assert res.normalized == res.t_n / (4 * res.d_hat)
        assert res.k_min == 2

    def test_round_trip(self):
        res = kendall_change_test(scenario(0.8, seed=2))
        assert TestResult.from_dict(res.to_dict()) == res

    def test_strong_jump_rejected(self):
        decisions = [kendall_change_test(scenario(0.8, n=500, seed=s)).reject for s in range(10)]
        assert sum(decisions) >= 9

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_kendall_monotone_invariance_bit_identical(self, seed):
        s = scenario(0.0, n=60, seed=seed, dist="t3")
        t = BivariateSeries(increasing(s.xs), 3.0 * s.ys + 7.0)
        assert kendall_change_test(t) == kendall_change_test(s)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_swap_symmetry(self, seed):
        s = scenario(-0.2, n=80, seed=seed)
        for name in ("kendall", "spearman_copula", "pearson"):
            a, b = TESTS[name](s), TESTS[name](s.swapped())
            assert a.normalized == pytest.approx(b.normalized, rel=1e-12)
            assert a.argmax_k == b.argmax_k

    def test_p_value_decreasing(self):
        # below about 0.3 the cdf is under machine epsilon and sf rounds to 1
        xs = np.linspace(0.4, 3.0, 300)
        p = np.array([kolmogorov_sf(x) for x in xs])
        assert np.all(np.diff(p) < 0)

    @pytest.mark.parametrize("seed", range(30))
    def test_reject_iff_above_quantile(self, seed):
        res = kendall_change_test(scenario(0.2, n=100, seed=seed))
        q = kolmogorov_quantile(0.95)
        if abs(res.normalized - q) > 1e-12:
            assert res.reject == (res.normalized > q)


class TestLocate:
    def test_matches_test_argmax(self):
        s = scenario(-0.4, n=400, seed=5)
        est = locate_change(s)
        assert est.k_hat == kendall_change_test(s).argmax_k
        assert est.lambda_hat == est.k_hat / 400

    def test_comonotone_takes_k_min(self):
        x = np.arange(10.0)
        assert locate_change(BivariateSeries(x, x)).k_hat == 2

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            locate_change(BivariateSeries([1, 2, 3], [1, 2, 3]))

    def test_near_truth(self):
        errors = [abs(locate_change(scenario(-0.4, n=1000, seed=s)).lambda_hat - 0.5) for s in range(20)]
        assert np.mean(errors) < 0.05


class TestChangeModel:
    P = ChangeModelParams(0.5, 0.0, 1.0, 0.5)

    def test_before_change(self):
        for k in range(2, 51):
            assert mean_tau_prefix(k, 100, ChangeModelParams(0.5, 0.3, -0.2, 0.1)) == 0.3

    def test_hand_example(self):
        assert mean_tau_prefix(4, 4, self.P) == 0.5

    def test_equal_values(self):
        p = ChangeModelParams(0.3, 0.25, 0.25, 0.25)
        assert all(mean_tau_prefix(k, 50, p) == pytest.approx(0.25, abs=1e-15) for k in range(2, 51))

    def test_bad_k(self):
        with pytest.raises(InvalidInputError):
            mean_tau_prefix(1, 10, self.P)

    def test_c_values(self):
        assert c_lambda(0.0, self.P) == 0.0
        assert c_lambda(1.0, self.P) == 0.0
        assert c_lambda(0.5, self.P) == pytest.approx(-0.25, abs=1e-15)
        assert c_lambda(0.75, self.P) == pytest.approx(-0.125, abs=1e-15)

    def test_c_continuous_at_change(self):
        assert c_lambda(0.5 + 1e-9, self.P) == pytest.approx(c_lambda(0.5, self.P), abs=1e-8)

    def test_c_no_change(self):
        p = ChangeModelParams(0.4, 0.2, 0.2, 0.2)
        assert all(c_lambda(lam, p) == pytest.approx(0.0, abs=1e-15) for lam in np.linspace(0, 1, 21))

    def test_identifiability(self):
        assert identifiability_condition(self.P)
        assert not identifiability_condition(ChangeModelParams(0.5, 0.0, 1.0, 1.0))
        assert not identifiability_condition(ChangeModelParams(0.5, 0.0, 1.0, 0.0))
        with pytest.raises(InvalidInputError):
            identifiability_condition(ChangeModelParams(0.5, 0.3, 0.3, 0.1))

    @pytest.mark.parametrize("kw", [dict(lambda_star=0.0), dict(lambda_star=1.0), dict(tau_G=1.5)])
    def test_params_validation(self, kw):
        base = dict(lambda_star=0.5, tau_F=0.0, tau_G=1.0, tau_FG=0.5)
        with pytest.raises(InvalidInputError):
            ChangeModelParams(**{**base, **kw})

    @settings(max_examples=60, deadline=None)
    @given(
        st.floats(0.05, 0.95),
        st.floats(-0.9, 0.9),
        st.floats(-0.9, 0.9),
        st.floats(0.0, 0.999),
    )
    def test_argmax_at_change(self, ls, tf, tg, u):
        if abs(tg - tf) < 0.05:
            return
        lower = (1 - ls) ** 2 / (2 * ((1 - ls) ** 2 + ls))
        ratio = lower + u * (1 - lower)
        p = ChangeModelParams(ls, tf, tg, tf + ratio * (tg - tf))
        if not identifiability_condition(p):
            return
        grid = np.arange(1001) / 1000
        values = np.abs([c_lambda(lam, p) for lam in grid])
        assert abs(grid[int(np.argmax(values))] - ls) <= 1e-3 + 1e-12

    def test_finite_n_mean_converges(self):
        n = 100_000
        p = ChangeModelParams(0.4, 0.1, 0.6, 0.3)
        end = mean_tau_prefix(n, n, p)
        for lam in np.linspace(0.05, 1.0, 20):
            k = math.floor(lam * n)
            assert (k / n) * (mean_tau_prefix(k, n, p) - end) == pytest.approx(c_lambda(lam, p), abs=1e-3)


class TestEfficiency:
    def test_independence(self):
        assert asv_pearson_normal(0.0) == 1.0
        assert asv_kendall_normal(0.0) == pytest.approx(math.pi**2 / 9)
        assert round(asv_kendall_normal(0.0), 3) == 1.097

    def test_perfect(self):
        assert asv_pearson_normal(1.0) == 0.0
        assert asv_pearson_normal(-1.0) == 0.0

    def test_tau_rho(self):
        assert rho_from_tau(0.0) == 0.0
        assert rho_from_tau(1.0) == 1.0
        for rho in (-0.8, -0.3, 0.2, 0.7):
            assert rho_from_tau(tau_from_rho(rho)) == pytest.approx(rho, abs=1e-14)

    @pytest.mark.parametrize("fn", [asv_pearson_normal, asv_kendall_normal, rho_from_tau, tau_from_rho])
    def test_domain(self, fn):
        with pytest.raises(InvalidInputError):
            fn(1.2)
