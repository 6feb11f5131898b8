"""Pooled-sample kernel density likelihood (the benchmark method).

Ensemble observations are pooled into one i.i.d. sample, a Gaussian
kernel density with a Silverman-rule bandwidth is fitted, and the
empirical series is scored as a product of pointwise densities. By
construction the result ignores time ordering entirely.
"""

from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import DegenerateSampleError, InvalidArgumentError


@dataclass(frozen=True, eq=False)
class PooledSample:
    """Flat pool of ensemble observations in replication-major order.

    For univariate series values has shape (m,); panel data keeps
    (m, n) and is scored as a per-dimension product downstream.
    """

    values: np.ndarray
    source: str = ""

    @property
    def size(self):
        return self.values.shape[0]


def pool_samples(ens, discard=0):
    """Concatenate all replications into a single sample.

    ``discard`` drops that many leading observations from every
    replication first (for models that need extra equilibration).
    """
    if discard < 0 or discard >= ens.length:
        raise InvalidArgumentError(
            f"discard must lie in [0, T), got {discard} with T={ens.length}"
        )
    stacked = np.concatenate([rep.data[discard:] for rep in ens.replications], axis=0)
    if stacked.shape[1] == 1:
        stacked = stacked[:, 0]
    return PooledSample(
        np.ascontiguousarray(stacked),
        source=f"ensemble(base_seed={ens.base_seed}, R={ens.size})",
    )


def silverman_bandwidth(sample):
    """h = 0.9 * min(std, IQR/1.34) * m**(-1/5) for a 1-D sample."""
    values = sample.values if isinstance(sample, PooledSample) else np.asarray(sample)
    if values.ndim != 1:
        raise InvalidArgumentError("bandwidth rule expects a 1-D sample")
    m = values.shape[0]
    if m < 2:
        raise InvalidArgumentError("need at least two observations")
    std = float(values.std(ddof=1))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    spread = min(std, (q75 - q25) / 1.34)
    if not np.isfinite(spread) or spread <= 0.0:
        raise DegenerateSampleError("sample has zero spread; no bandwidth exists")
    return 0.9 * spread * m ** (-0.2)


def gaussian_kde_density(sample, h, x):
    """Gaussian-kernel density estimate at x (scalar or array).

    Evaluated in log space over the internally sorted sample, so the
    result is invariant to sample order.
    """
    if h <= 0:
        raise InvalidArgumentError("bandwidth must be positive")
    values = sample.values if isinstance(sample, PooledSample) else np.asarray(sample)
    sorted_vals = np.ascontiguousarray(np.sort(values))
    queries = np.atleast_1d(np.asarray(x, dtype=float))
    dens = np.exp(backends.kde_log_density(sorted_vals, float(h), queries))
    return float(dens[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else dens


def _log_likelihood_1d(values, queries):
    sorted_vals = np.ascontiguousarray(np.sort(values))
    h = silverman_bandwidth(sorted_vals)
    logdens = backends.kde_log_density(sorted_vals, h, np.ascontiguousarray(queries))
    if not np.all(np.isfinite(logdens)):
        return float("-inf")
    # summing the sorted log terms makes the result exactly invariant
    # to any permutation of the empirical observations
    return float(np.sort(logdens).sum())


def kde_log_likelihood(ens, x_emp, discard=0):
    """Sum of log pooled-KDE densities of the empirical observations.

    Panel data is scored as a per-dimension product of univariate
    estimates. Returns -inf on a degenerate pool or underflowing
    density instead of raising, so samplers can treat it as zero
    likelihood.
    """
    pooled = pool_samples(ens, discard)
    emp = x_emp.data
    try:
        if pooled.values.ndim == 1:
            return _log_likelihood_1d(pooled.values, emp[:, 0])
        total = 0.0
        for j in range(pooled.values.shape[1]):
            total += _log_likelihood_1d(pooled.values[:, j], emp[:, j])
            if total == float("-inf"):
                break
        return total
    except DegenerateSampleError:
        return float("-inf")


def density_curve(sample, h, grid):
    """(x, density) pairs for diagnostics/CSV export."""
    dens = gaussian_kde_density(sample, h, np.asarray(grid, dtype=float))
    return np.column_stack([np.asarray(grid, dtype=float), dens])
