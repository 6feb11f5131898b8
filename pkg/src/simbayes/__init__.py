"""Likelihood-free Bayesian estimation of stochastic simulation models.

The package approximates an intractable simulator likelihood either
with a mixture density network over lag windows or with a pooled-sample
kernel density baseline, samples the resulting posterior with an
adaptive population Metropolis-Hastings scheme, and benchmarks estimate
quality against known ground-truth parameters.
"""

__version__ = "0.1.0"

from .backends import backend_name
from .params import ParameterVector
from .models import (Ensemble, TimeSeriesMatrix, first_difference,
                     generate_ensemble)
from .likelihood import EstimationProblem, LogPosterior, log_posterior
from .sampler import McmcConfig, PosteriorSample, run_chain
from .bench import aggregate_metrics, lag_scan, loss_ls, summarize
from .mdn import MdnArchitecture, TrainConfig, mdn_log_likelihood, train
from .kde import kde_log_likelihood

__all__ = [
    "EstimationProblem",
    "Ensemble",
    "LogPosterior",
    "McmcConfig",
    "MdnArchitecture",
    "ParameterVector",
    "PosteriorSample",
    "TimeSeriesMatrix",
    "TrainConfig",
    "aggregate_metrics",
    "backend_name",
    "first_difference",
    "generate_ensemble",
    "kde_log_likelihood",
    "lag_scan",
    "log_posterior",
    "loss_ls",
    "mdn_log_likelihood",
    "run_chain",
    "summarize",
    "train",
    "__version__",
]
