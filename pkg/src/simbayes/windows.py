"""Rolling-window training sets and their normalization statistics."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .rng import standard_normal


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """Lag-window inputs and next-step targets.

    inputs: (M, L*n) windows flattened time-major; targets: (M, n).
    Windows never straddle replication boundaries.
    """

    inputs: np.ndarray
    targets: np.ndarray
    lag: int

    @property
    def size(self):
        return self.inputs.shape[0]

    @property
    def target_dim(self):
        return self.targets.shape[1]


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-dimension means and stds used to whiten a dataset.

    Stds below 1e-12 are replaced by 1 and flagged so that degenerate
    (deterministic) data stays trainable.
    """

    mu_x: np.ndarray
    sigma_x: np.ndarray
    mu_y: np.ndarray
    sigma_y: np.ndarray
    degenerate_x: np.ndarray
    degenerate_y: np.ndarray

    @property
    def any_degenerate(self):
        return bool(self.degenerate_x.any() or self.degenerate_y.any())


def window_series(data, lag):
    """Windows/targets for a single (T, n) array; returns (X, Y)."""
    t_len, n = data.shape
    if lag < 1:
        raise InvalidArgumentError("lag must be >= 1")
    if t_len <= lag:
        raise InvalidArgumentError(f"series length {t_len} must exceed lag {lag}")
    m = t_len - lag
    idx = np.arange(lag)[None, :] + np.arange(m)[:, None]
    x = data[idx].reshape(m, lag * n)
    y = data[lag:]
    return x, y


def build_windows(ens, lag):
    """Training set of all rolling windows of an ensemble.

    Per replication, window t covers observations t..t+L-1 with target
    t+L; replications are concatenated in seed order, giving
    M = R * (T - L) examples.
    """
    xs, ys = [], []
    for rep in ens.replications:
        x, y = window_series(rep.data, lag)
        xs.append(x)
        ys.append(y)
    return WindowedDataset(
        np.ascontiguousarray(np.vstack(xs)),
        np.ascontiguousarray(np.vstack(ys)),
        lag,
    )


def dataset_from_series(series, lag):
    """Windows of a single series (used to evaluate likelihoods)."""
    x, y = window_series(series.data, lag)
    return WindowedDataset(np.ascontiguousarray(x), np.ascontiguousarray(y), lag)


def compute_norm_stats(ds, floor=1e-12):
    """Sample means and population stds per dimension, with the
    degenerate-variance replacement rule."""
    if ds.size < 2:
        raise InvalidArgumentError("need at least 2 examples for statistics")
    mu_x = ds.inputs.mean(axis=0)
    sigma_x = ds.inputs.std(axis=0)
    mu_y = ds.targets.mean(axis=0)
    sigma_y = ds.targets.std(axis=0)
    degenerate_x = sigma_x < floor
    degenerate_y = sigma_y < floor
    sigma_x = np.where(degenerate_x, 1.0, sigma_x)
    sigma_y = np.where(degenerate_y, 1.0, sigma_y)
    return NormStats(mu_x, sigma_x, mu_y, sigma_y, degenerate_x, degenerate_y)


def normalize(ds, stats):
    """Elementwise (value - mu) / sigma on inputs and targets."""
    if stats.mu_x.shape[0] != ds.inputs.shape[1] or stats.mu_y.shape[0] != ds.targets.shape[1]:
        raise InvalidArgumentError("stats dimensions do not match dataset")
    return WindowedDataset(
        (ds.inputs - stats.mu_x) / stats.sigma_x,
        (ds.targets - stats.mu_y) / stats.sigma_y,
        ds.lag,
    )


def denormalize(ds, stats):
    return WindowedDataset(
        ds.inputs * stats.sigma_x + stats.mu_x,
        ds.targets * stats.sigma_y + stats.mu_y,
        ds.lag,
    )


def apply_noise(x, y, eta_x, eta_y, gen):
    """Gaussian perturbations for noise regularization.

    Draws are fresh on every call (one call per batch per epoch), so an
    example sees a new perturbation each epoch.
    """
    if eta_x < 0 or eta_y < 0:
        raise InvalidArgumentError("noise stds must be >= 0")
    if eta_x > 0:
        x = x + eta_x * standard_normal(gen, x.shape)
    if eta_y > 0:
        y = y + eta_y * standard_normal(gen, y.shape)
    return x, y
