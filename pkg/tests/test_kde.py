"""Pooled-KDE likelihood: bandwidth rule, density oracles, invariances."""

import math

import numpy as np
import pytest

from simbayes.errors import DegenerateSampleError, InvalidArgumentError
from simbayes.kde import (PooledSample, gaussian_kde_density,
                          kde_log_likelihood, pool_samples,
                          silverman_bandwidth)
from simbayes.models import (Ensemble, RandomWalkBreakConfig,
                             TimeSeriesMatrix, generate_ensemble)
from simbayes.params import ParameterVector
from simbayes.rng import rng_from, standard_normal


def _ensemble_of(arrays, base_seed=0):
    reps = tuple(TimeSeriesMatrix(np.asarray(a, dtype=float), base_seed + i)
                 for i, a in enumerate(arrays))
    theta = ParameterVector((), [], np.empty((0, 2)))
    return Ensemble(reps, base_seed, theta)


class TestPooling:
    def test_concatenation_order(self):
        pooled = pool_samples(_ensemble_of([[1.0, 2.0], [3.0, 4.0]]))
        assert np.allclose(pooled.values, [1, 2, 3, 4])

    def test_full_scale_count(self):
        theta = ParameterVector(("d1",), [0.4], [[0, 1]])
        fixed = RandomWalkBreakConfig(d2=0.5, sigma1=1.0, sigma2=2.0, tau=700)
        ens = generate_ensemble("random_walk_break", theta, fixed, 100, 1000, 3)
        assert pool_samples(ens).size == 100000

    def test_multiset_preserved(self):
        gen = rng_from(4)
        arrays = [gen.random(7), gen.random(7)]
        pooled = pool_samples(_ensemble_of(arrays))
        assert np.allclose(np.sort(pooled.values),
                           np.sort(np.concatenate(arrays)))

    def test_discard_drops_leading_observations(self):
        pooled = pool_samples(_ensemble_of([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]),
                              discard=1)
        assert np.allclose(pooled.values, [2, 3, 5, 6])

    def test_bad_discard_rejected(self):
        with pytest.raises(InvalidArgumentError):
            pool_samples(_ensemble_of([[1.0, 2.0]]), discard=2)


class TestBandwidth:
    def test_standard_normal_reference_value(self):
        # plug-in oracle: h = 0.9 * min(std, IQR/1.34) * m^(-1/5)
        gen = rng_from(5)
        sample = standard_normal(gen, 10**4)
        h = silverman_bandwidth(PooledSample(sample))
        std = sample.std(ddof=1)
        q75, q25 = np.percentile(sample, [75, 25])
        expected = 0.9 * min(std, (q75 - q25) / 1.34) * (10**4) ** (-0.2)
        assert h == pytest.approx(expected, rel=1e-12)
        assert h == pytest.approx(0.9 * 10 ** (-0.8), rel=0.10)

    def test_scale_equivariance(self):
        gen = rng_from(6)
        sample = standard_normal(gen, 500)
        assert silverman_bandwidth(PooledSample(2 * sample)) == pytest.approx(
            2 * silverman_bandwidth(PooledSample(sample)), rel=1e-12)

    def test_sample_size_rate_law(self):
        # replicating the sample 4x preserves the spread (up to the
        # ddof=1 correction, order 1/m) and shrinks h by 4^(-1/5)
        gen = rng_from(7)
        base = standard_normal(gen, 1000)
        grown = np.concatenate([base, base, base, base])
        assert silverman_bandwidth(PooledSample(grown)) == pytest.approx(
            silverman_bandwidth(PooledSample(base)) * 4 ** (-0.2), rel=2e-3)

    def test_zero_spread_raises_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            silverman_bandwidth(PooledSample(np.full(100, 3.0)))


class TestDensity:
    def test_single_point_kernel_height(self):
        sample = PooledSample(np.array([1.5, 1.5]))
        h = 0.3
        val = gaussian_kde_density(sample, h, 1.5)
        assert val == pytest.approx(1.0 / (h * math.sqrt(2 * math.pi)), rel=1e-12)

    def test_two_point_naive_sum_oracle(self):
        sample = PooledSample(np.array([-1.0, 1.0]))
        h = 0.7
        naive = sum(math.exp(-0.5 * ((0.0 - v) / h) ** 2)
                    for v in (-1.0, 1.0)) / (2 * h * math.sqrt(2 * math.pi))
        assert gaussian_kde_density(sample, h, 0.0) == pytest.approx(naive, rel=1e-12)

    def test_integrates_to_one_by_quadrature(self):
        gen = rng_from(8)
        sample = PooledSample(standard_normal(gen, 100))
        h = silverman_bandwidth(sample)
        spread = sample.values.std()
        grid = np.linspace(sample.values.min() - 10 * spread,
                           sample.values.max() + 10 * spread, 4001)
        dens = gaussian_kde_density(sample, h, grid)
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)

    def test_sample_permutation_leaves_density_unchanged(self):
        gen = rng_from(9)
        values = standard_normal(gen, 200)
        perm = values[gen.permutation(200)]
        grid = np.linspace(-3, 3, 17)
        a = gaussian_kde_density(PooledSample(values), 0.25, grid)
        b = gaussian_kde_density(PooledSample(perm), 0.25, grid)
        assert np.array_equal(a, b)  # internal sorting makes this exact


class TestLogLikelihood:
    def test_single_observation_single_term(self):
        ens = _ensemble_of([standard_normal(rng_from(10), 50)])
        x_emp = TimeSeriesMatrix(np.array([0.2]), 1)
        pooled = pool_samples(ens)
        h = silverman_bandwidth(PooledSample(np.sort(pooled.values)))
        expected = math.log(gaussian_kde_density(pooled, h, 0.2))
        assert kde_log_likelihood(ens, x_emp) == pytest.approx(expected, rel=1e-12)

    def test_decomposes_into_pointwise_logs(self):
        gen = rng_from(11)
        ens = _ensemble_of([standard_normal(gen, 80)])
        queries = standard_normal(gen, 12)
        x_emp = TimeSeriesMatrix(queries, 1)
        pooled = pool_samples(ens)
        h = silverman_bandwidth(pooled)
        expected = sum(math.log(gaussian_kde_density(pooled, h, q)) for q in queries)
        assert kde_log_likelihood(ens, x_emp) == pytest.approx(expected, rel=1e-10)

    def test_matched_gaussian_entropy_oracle(self):
        # for N(0,1) pool and N(0,1) data the per-point average equals
        # the negative entropy -0.5*log(2*pi*e)
        gen = rng_from(12)
        ens = _ensemble_of([standard_normal(gen, 10**5)])
        x_emp = TimeSeriesMatrix(standard_normal(gen, 1000), 5)
        avg = kde_log_likelihood(ens, x_emp) / 1000
        assert abs(avg - (-1.4189)) < 0.05

    def test_time_permutation_invariance_is_exact(self):
        gen = rng_from(13)
        ens = _ensemble_of([standard_normal(gen, 300)])
        series = standard_normal(gen, 40)
        a = kde_log_likelihood(ens, TimeSeriesMatrix(series, 1))
        b = kde_log_likelihood(ens, TimeSeriesMatrix(series[::-1].copy(), 1))
        assert a == b

    def test_degenerate_pool_gives_minus_inf(self):
        ens = _ensemble_of([np.full(60, 1.0)])
        x_emp = TimeSeriesMatrix(np.array([1.0, 2.0]), 1)
        assert kde_log_likelihood(ens, x_emp) == float("-inf")


def test_panel_data_scored_as_per_dimension_product():
    gen = rng_from(15)
    a = standard_normal(gen, 60)
    b = standard_normal(gen, 60) * 2 + 1
    panel = _ensemble_of([np.column_stack([a, b])])
    series = np.column_stack([standard_normal(gen, 9),
                              standard_normal(gen, 9)])
    got = kde_log_likelihood(panel, TimeSeriesMatrix(series, 1))
    per_dim = 0.0
    for j, col in enumerate((a, b)):
        uni = _ensemble_of([col])
        per_dim += kde_log_likelihood(uni, TimeSeriesMatrix(series[:, j], 1))
    assert got == pytest.approx(per_dim, rel=1e-12)


def test_brute_force_equivalence_on_random_instances():
    # criterion-6 style oracle at unit-test scale: naive double sum in
    # linear space vs the log-space implementation
    gen = rng_from(14)
    for trial in range(10):
        m = int(gen.integers(5, 200))
        t_len = int(gen.integers(1, 50))
        values = standard_normal(gen, m) * (1 + gen.random())
        ens = _ensemble_of([values])
        series = standard_normal(gen, t_len)
        h = silverman_bandwidth(PooledSample(values))
        naive = 0.0
        for x in series:
            total = sum(math.exp(-0.5 * ((x - v) / h) ** 2) for v in values)
            naive += math.log(total / (m * h * math.sqrt(2 * math.pi)))
        got = kde_log_likelihood(ens, TimeSeriesMatrix(series, 0))
        assert got == pytest.approx(naive, rel=1e-10)
