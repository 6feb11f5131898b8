"""Benchmarking harness: loss arithmetic, posterior summaries,
method-comparison aggregates, and the lag-saturation diagnostic."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, TrainingDivergedError
from .mdn import MdnArchitecture, eval_log_density_batch, train
from .models import generate_ensemble, preprocess_ensemble
from .params import validate_bounds
from .windows import build_windows


def normalize_params(values, bounds):
    """Map each component to its position in [0, 1] within its bounds.

    Values outside the bounds map outside [0, 1]; callers decide how to
    treat that.
    """
    b = validate_bounds(bounds)
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size != b.shape[0]:
        raise InvalidArgumentError("values and bounds disagree in length")
    return (v - b[:, 0]) / (b[:, 1] - b[:, 0])


def loss_ls(theta_true, theta_hat, bounds):
    """Euclidean distance between unit-box-normalized vectors."""
    diff = normalize_params(theta_true, bounds) - normalize_params(theta_hat, bounds)
    return float(np.sqrt((diff * diff).sum()))


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Posterior moments, cross-restart stability, and the loss value.

    sigma_sampling is the sample (n-1) std of per-restart posterior
    means; it is None (absent, not zero) for single-restart runs. ls is
    None when no true parameter values are known.
    """

    names: tuple
    mu_posterior: np.ndarray
    sigma_posterior: np.ndarray
    sigma_sampling: object
    ls: object
    theta_true: object
    bounds: np.ndarray


def summarize(sample, bounds, theta_true=None):
    """Reduce a PosteriorSample to a PosteriorSummary."""
    bounds = validate_bounds(bounds)
    draws = sample.draws
    if draws.shape[0] == 0:
        raise InvalidArgumentError("posterior sample is empty")
    mu = draws.mean(axis=0)
    sigma = draws.std(axis=0, ddof=1)
    if len(sample.restart_draws) >= 2:
        sigma_sampling = sample.restart_means().std(axis=0, ddof=1)
    else:
        sigma_sampling = None
    ls = None
    true_arr = None
    if theta_true is not None:
        true_arr = np.asarray(theta_true, dtype=float).reshape(-1)
        ls = loss_ls(true_arr, mu, bounds)
    return PosteriorSummary(tuple(sample.names), mu, sigma, sigma_sampling,
                            ls, true_arr, bounds)


@dataclass(frozen=True)
class AggregateMetrics:
    """Percentages over paired experiments / individual parameters."""

    pct_loss_better: float
    pct_param_error_better: float
    pct_param_std_better: float
    experiments: int
    parameter_cases: int


def aggregate_metrics(pairs):
    """Comparison percentages over (mdn, kde) summary pairs.

    All comparisons are strict: a tie counts as not-better. Pairs must
    describe the same experiment (same parameter names and true values).
    """
    if not pairs:
        raise InvalidArgumentError("need at least one summary pair")
    loss_wins = 0
    err_wins = 0
    std_wins = 0
    param_cases = 0
    for mdn_s, kde_s in pairs:
        if mdn_s.names != kde_s.names:
            raise InvalidArgumentError("pair mismatch: parameter names differ")
        if mdn_s.theta_true is None or kde_s.theta_true is None:
            raise InvalidArgumentError("aggregate metrics need true values")
        if not np.array_equal(mdn_s.theta_true, kde_s.theta_true):
            raise InvalidArgumentError("pair mismatch: true values differ")
        if mdn_s.ls is None or kde_s.ls is None:
            raise InvalidArgumentError("aggregate metrics need loss values")
        if mdn_s.ls < kde_s.ls:
            loss_wins += 1
        err_mdn = np.abs(mdn_s.mu_posterior - mdn_s.theta_true)
        err_kde = np.abs(kde_s.mu_posterior - kde_s.theta_true)
        err_wins += int((err_mdn < err_kde).sum())
        std_wins += int((mdn_s.sigma_posterior < kde_s.sigma_posterior).sum())
        param_cases += len(mdn_s.names)
    n_exp = len(pairs)
    return AggregateMetrics(
        100.0 * loss_wins / n_exp,
        100.0 * err_wins / param_cases,
        100.0 * std_wins / param_cases,
        n_exp,
        param_cases,
    )


@dataclass(eq=False)
class LagScanResult:
    """Conditional density curves per lag on a common grid."""

    grid: np.ndarray
    curves: dict  # lag -> density array over grid
    tv: dict  # (lag_a, lag_b) -> total variation distance
    failures: dict  # lag -> error message


def total_variation(grid, f1, f2):
    """0.5 * sum |f1 - f2| * dy on a uniform grid."""
    dy = float(grid[1] - grid[0])
    return 0.5 * float(np.abs(f1 - f2).sum()) * dy


def lag_scan(model_id, fixed, theta, lags, window, train_cfg,
             replications, length, base_seed, hidden=(32, 32, 32),
             components=16, grid=None, grid_points=2001):
    """Train one network per lag and compare the conditional densities.

    All lags share one ensemble (windows are rebuilt per lag) and one
    conditioning window, whose last L values condition each curve. The
    default grid spans the pooled ensemble range padded by 4 sample
    stds. Training failures are recorded per lag and skipped; total
    variation distances are computed for every pair of successful lags.
    """
    lags = sorted(set(int(v) for v in lags))
    if not lags or lags[0] < 1:
        raise InvalidArgumentError("lags must be positive integers")
    window = np.asarray(window, dtype=float).reshape(-1)
    if window.size < lags[-1]:
        raise InvalidArgumentError(
            f"conditioning window of length {window.size} is shorter than "
            f"the largest lag {lags[-1]}"
        )
    ens = generate_ensemble(model_id, theta, fixed, replications, length, base_seed)
    ens = preprocess_ensemble(model_id, ens)
    if ens.dim != 1:
        raise InvalidArgumentError("lag scan supports univariate series only")
    if grid is None:
        pooled = np.concatenate([rep.data[:, 0] for rep in ens.replications])
        pad = 4.0 * float(pooled.std())
        grid = np.linspace(pooled.min() - pad, pooled.max() + pad, grid_points)
    else:
        grid = np.asarray(grid, dtype=float)

    curves = {}
    failures = {}
    targets = grid.reshape(-1, 1)
    for lag in lags:
        ds = build_windows(ens, lag)
        arch = MdnArchitecture(input_dim=lag, hidden=hidden,
                               components=components, target_dim=1)
        try:
            model = train(ds, arch, train_cfg)
        except TrainingDivergedError as err:
            failures[lag] = str(err)
            continue
        cond = np.tile(window[-lag:], (grid.size, 1))
        curves[lag] = np.exp(eval_log_density_batch(model, cond, targets))
    tv = {}
    done = sorted(curves)
    for i, la in enumerate(done):
        for lb in done[i + 1:]:
            tv[(la, lb)] = total_variation(grid, curves[la], curves[lb])
    return LagScanResult(grid, curves, tv, failures)
