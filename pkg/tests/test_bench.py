"""Loss arithmetic (including published-value reproduction), summaries,
aggregates, and the lag-saturation diagnostic at desk scale."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simbayes.bench import (aggregate_metrics, lag_scan, loss_ls,
                            normalize_params, summarize, total_variation,
                            PosteriorSummary)
from simbayes.errors import InvalidArgumentError
from simbayes.mdn import TrainConfig
from simbayes.models import Ar2Config, LogNormalIidConfig
from simbayes.params import ParameterVector
from simbayes.sampler import McmcConfig, run_chain


class TestNormalizeParams:
    def test_endpoints(self):
        bounds = [[-2.0, 4.0]]
        assert normalize_params([-2.0], bounds)[0] == 0.0
        assert normalize_params([4.0], bounds)[0] == 1.0

    def test_midpoint(self):
        assert normalize_params([1.0], [[-2.0, 4.0]])[0] == pytest.approx(0.5)

    def test_reference_hand_arithmetic(self):
        got = normalize_params([-0.7, -0.4, 0.5, 0.3],
                               [[-1, 0], [-1, 0], [0, 1], [0, 1]])
        assert np.allclose(got, [0.3, 0.6, 0.5, 0.3])


class TestLossLs:
    BH_BOUNDS = [[-1, 0], [-1, 0], [0, 1], [0, 1]]
    BH_TRUE = [-0.7, -0.4, 0.5, 0.3]

    def test_zero_at_truth(self):
        assert loss_ls(self.BH_TRUE, self.BH_TRUE, self.BH_BOUNDS) == 0.0

    def test_published_mdn_value(self):
        got = loss_ls(self.BH_TRUE, [-0.6931, -0.4048, 0.5505, 0.3160],
                      self.BH_BOUNDS)
        assert abs(got - 0.0536) < 0.0001

    def test_published_kde_value(self):
        got = loss_ls(self.BH_TRUE, [-0.5910, -0.4004, 0.4092, 0.3083],
                      self.BH_BOUNDS)
        assert abs(got - 0.1421) < 0.0001

    def test_affine_rescale_invariance(self):
        # rescaling a parameter's bounds and values together changes
        # nothing after normalization
        true = [0.3, 5.0]
        hat = [0.5, 7.0]
        bounds = [[0.0, 1.0], [0.0, 10.0]]
        scaled_true = [0.3, 50.0]
        scaled_hat = [0.5, 70.0]
        scaled_bounds = [[0.0, 1.0], [0.0, 100.0]]
        assert loss_ls(true, hat, bounds) == pytest.approx(
            loss_ls(scaled_true, scaled_hat, scaled_bounds), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=5),
       st.lists(st.floats(0.01, 0.99), min_size=2, max_size=5),
       st.lists(st.floats(0.01, 0.99), min_size=2, max_size=5))
def test_loss_symmetry_and_triangle(a, b, c):
    d = min(len(a), len(b), len(c))
    a, b, c = a[:d], b[:d], c[:d]
    bounds = [[0.0, 1.0]] * d
    assert loss_ls(a, b, bounds) == pytest.approx(loss_ls(b, a, bounds), rel=1e-12)
    assert loss_ls(a, c, bounds) <= loss_ls(a, b, bounds) + loss_ls(b, c, bounds) + 1e-12


class TestSummarize:
    def _chain(self, seed=1):
        cfg = McmcConfig(iterations=80, set_size=5, burn_in=20, restarts=3,
                         seed=seed)
        return run_chain(lambda v: 0.0, [[0.0, 1.0], [0.0, 2.0]], cfg,
                         names=("a", "b"))

    def test_identical_restarts_zero_sampling_std(self):
        sample = self._chain()
        for rd in sample.restart_draws:
            rd[:] = sample.restart_draws[0]
        summ = summarize(sample, [[0.0, 1.0], [0.0, 2.0]])
        assert np.allclose(summ.sigma_sampling, 0.0)

    def test_two_point_sampling_std_uses_sample_estimator(self):
        # restart means 0 and 2 -> sample (n-1) std is sqrt(2)
        sample = self._chain()
        sample = type(sample)(sample.names, sample.restart_draws[:2],
                              sample.traces[:2], sample.accept_counts[:2],
                              sample.out_of_bounds_counts[:2], sample.set_size)
        sample.restart_draws[0][:] = 0.0
        sample.restart_draws[1][:] = 2.0
        summ = summarize(sample, [[0.0, 1.0], [0.0, 2.0]])
        assert np.allclose(summ.sigma_sampling, math.sqrt(2.0))

    def test_mu_matches_expectation(self):
        from simbayes.sampler import expectation
        sample = self._chain(3)
        summ = summarize(sample, [[0.0, 1.0], [0.0, 2.0]])
        assert summ.mu_posterior[0] == pytest.approx(
            expectation(sample, lambda v: v[0]), abs=1e-12)

    def test_single_restart_reports_absent_sampling_std(self):
        cfg = McmcConfig(iterations=40, set_size=4, burn_in=10, restarts=1, seed=2)
        sample = run_chain(lambda v: 0.0, [[0.0, 1.0]], cfg)
        summ = summarize(sample, [[0.0, 1.0]])
        assert summ.sigma_sampling is None

    def test_ls_present_with_truth(self):
        sample = self._chain(4)
        summ = summarize(sample, [[0.0, 1.0], [0.0, 2.0]], theta_true=[0.5, 1.0])
        assert summ.ls is not None and summ.ls >= 0.0


def _summary(names, true, mu, sigma, bounds):
    return PosteriorSummary(tuple(names), np.asarray(mu, float),
                            np.asarray(sigma, float), None,
                            loss_ls(true, mu, bounds), np.asarray(true, float),
                            np.asarray(bounds, float))


class TestAggregateMetrics:
    BOUNDS = [[0.0, 1.0], [0.0, 1.0]]

    def test_strict_dominance_gives_hundreds(self):
        pairs = []
        for _ in range(3):
            mdn = _summary(("a", "b"), [0.5, 0.5], [0.51, 0.52], [0.1, 0.1], self.BOUNDS)
            kde = _summary(("a", "b"), [0.5, 0.5], [0.6, 0.6], [0.2, 0.2], self.BOUNDS)
            pairs.append((mdn, kde))
        agg = aggregate_metrics(pairs)
        assert (agg.pct_loss_better, agg.pct_param_error_better,
                agg.pct_param_std_better) == (100.0, 100.0, 100.0)

    def test_paper_scale_percentages_shape(self):
        # 27 parameter cases: 10 experiments with mixed outcomes
        pairs = []
        wins = [True, True, False]
        k = 0
        for i in range(3):
            mdn_mu = [0.51 if wins[(k + j) % 3] else 0.7 for j in range(2)]
            k += 2
            mdn = _summary(("a", "b"), [0.5, 0.5], mdn_mu, [0.1, 0.1], self.BOUNDS)
            kde = _summary(("a", "b"), [0.5, 0.5], [0.6, 0.6], [0.15, 0.15], self.BOUNDS)
            pairs.append((mdn, kde))
        agg = aggregate_metrics(pairs)
        assert agg.parameter_cases == 6
        assert 0.0 <= agg.pct_param_error_better <= 100.0

    def test_tie_counts_as_not_better(self):
        mdn = _summary(("a",), [0.5], [0.6], [0.1], [[0.0, 1.0]])
        kde = _summary(("a",), [0.5], [0.6], [0.1], [[0.0, 1.0]])
        agg = aggregate_metrics([(mdn, kde)])
        assert agg.pct_loss_better == 0.0
        assert agg.pct_param_std_better == 0.0

    def test_misaligned_pairs_rejected(self):
        mdn = _summary(("a",), [0.5], [0.6], [0.1], [[0.0, 1.0]])
        kde = _summary(("b",), [0.5], [0.6], [0.1], [[0.0, 1.0]])
        with pytest.raises(InvalidArgumentError):
            aggregate_metrics([(mdn, kde)])


class TestTotalVariation:
    def test_identical_curves_zero(self):
        grid = np.linspace(0, 1, 101)
        f = np.exp(-grid)
        assert total_variation(grid, f, f) == 0.0

    def test_disjoint_unit_densities_give_one(self):
        grid = np.linspace(0.0, 1.0, 10001)
        f1 = np.where(grid < 0.5, 2.0, 0.0)
        f2 = np.where(grid >= 0.5, 2.0, 0.0)
        assert total_variation(grid, f1, f2) == pytest.approx(1.0, abs=2e-3)


class TestLagScan:
    def test_iid_lognormal_saturates_at_first_lag(self):
        theta = ParameterVector((), [], np.empty((0, 2)))
        window = np.array([0.9, 1.1, 0.8, 1.0])
        result = lag_scan("lognormal_iid", LogNormalIidConfig(sigma=0.5), theta,
                          [1, 2], window, TrainConfig(seed=3),
                          replications=50, length=500, base_seed=600)
        assert result.tv[(1, 2)] < 0.05

    def test_ar2_needs_two_lags(self):
        # opposing recent values separate the 1-lag and 2-lag
        # conditionals most: the 1-lag predictor sees only x_t
        theta = ParameterVector((), [], np.empty((0, 2)))
        window = np.array([0.0, -1.2, 1.2])
        result = lag_scan("ar2", Ar2Config(), theta, [1, 2, 3], window,
                          TrainConfig(seed=4), replications=50, length=500,
                          base_seed=700)
        assert result.tv[(1, 2)] > 0.10
        assert result.tv[(2, 3)] < 0.05
        # L=2 curve tracks the analytic conditional N(0.45x + 0.45x', 1)
        mean = 0.45 * window[-1] + 0.45 * window[-2]
        analytic = np.exp(-0.5 * (result.grid - mean) ** 2) / math.sqrt(2 * math.pi)
        assert total_variation(result.grid, result.curves[2], analytic) < 0.1

    def test_single_lag_gives_one_curve_no_distances(self):
        theta = ParameterVector((), [], np.empty((0, 2)))
        result = lag_scan("lognormal_iid", LogNormalIidConfig(), theta, [2],
                          np.array([1.0, 1.0]),
                          TrainConfig(epochs=2, batch_size=256, seed=5),
                          replications=5, length=80, base_seed=800,
                          hidden=(8,), components=4)
        assert set(result.curves) == {2}
        assert result.tv == {}

    def test_window_shorter_than_largest_lag_rejected(self):
        theta = ParameterVector((), [], np.empty((0, 2)))
        with pytest.raises(InvalidArgumentError):
            lag_scan("ar2", Ar2Config(), theta, [1, 4], np.array([0.1, 0.2]),
                     TrainConfig(epochs=1, seed=0), replications=3, length=50,
                     base_seed=0)
