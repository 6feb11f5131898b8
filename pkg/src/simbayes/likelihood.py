"""Single contract from a candidate parameter vector to log posterior.

Wires simulator -> preprocessing -> (MDN train + evaluate | pooled KDE)
-> uniform prior. Ensembles for every candidate are generated from the
same base seed (common random numbers), and the MDN training seed is a
deterministic function of the candidate, so the whole map is a pure
function of (problem, theta).
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SimBayesError, SimulationDivergedError
from .kde import kde_log_likelihood
from .mdn import MdnArchitecture, TrainConfig, mdn_log_likelihood, train
from .models import generate_ensemble, preprocess_ensemble, preprocess_series
from .params import ParameterVector, validate_bounds
from .rng import quantize_theta, theta_hash
from .windows import build_windows

METHOD_MDN = "mdn"
METHOD_KDE = "kde"


@dataclass(frozen=True, eq=False)
class EstimationProblem:
    """Everything needed to score a candidate parameter vector."""

    model_id: str
    fixed: object
    free_names: tuple
    free_bounds: np.ndarray
    x_emp: object  # TimeSeriesMatrix, in model output units
    method: str = METHOD_MDN
    replications: int = 100
    sim_length: int = 1000
    lag: int = 3
    base_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden: tuple = (32, 32, 32)
    components: int = 16
    discard: int = 0

    def __post_init__(self):
        object.__setattr__(self, "free_names", tuple(self.free_names))
        object.__setattr__(self, "free_bounds", validate_bounds(self.free_bounds))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.method not in (METHOD_MDN, METHOD_KDE):
            raise SimBayesError(f"unknown method {self.method!r}")
        if len(self.free_names) != self.free_bounds.shape[0]:
            raise SimBayesError("free_names and free_bounds disagree in length")

    @property
    def dim(self):
        return len(self.free_names)

    def theta(self, values, out_of_support=False):
        return ParameterVector(self.free_names, values, self.free_bounds,
                               out_of_support)


class LogPosterior:
    """Callable evaluating log p(theta | X) up to the evidence constant.

    Keeps an optional memoization cache keyed on theta quantized to 12
    decimal digits (only the scalar value is stored) and an evaluation
    log with wall-clock timings.
    """

    def __init__(self, problem, cache=True):
        self.problem = problem
        widths = problem.free_bounds[:, 1] - problem.free_bounds[:, 0]
        # uniform prior: constant density 1/vol inside the box
        self.log_prior_const = -float(np.log(widths).sum())
        self.x_emp_processed = preprocess_series(problem.model_id, problem.x_emp)
        self._cache = {} if cache else None
        self.eval_rows = []

    def _theta_values(self, theta):
        if isinstance(theta, ParameterVector):
            return np.asarray(theta.values, dtype=float)
        return np.asarray(theta, dtype=float).reshape(-1)

    def _inside(self, values):
        b = self.problem.free_bounds
        return bool(np.all((values >= b[:, 0]) & (values <= b[:, 1])))

    def _train_seed(self, values):
        p = self.problem
        mixed = theta_hash(values) ^ (p.base_seed * 2654435761) ^ (p.train.seed * 40503)
        return mixed & (2**63 - 1)

    def log_likelihood(self, theta):
        """Likelihood term only; -inf outside the box or on divergence."""
        values = self._theta_values(theta)
        if values.size != self.problem.dim:
            raise SimBayesError(
                f"theta has dimension {values.size}, expected {self.problem.dim}"
            )
        start = time.perf_counter()
        if not self._inside(values):
            self._log(values, float("-inf"), start, "out_of_bounds")
            return float("-inf")
        key = quantize_theta(values)
        if self._cache is not None and key in self._cache:
            self._log(values, self._cache[key], start, "cached")
            return self._cache[key]
        p = self.problem
        try:
            ens = generate_ensemble(
                p.model_id, p.theta(values), p.fixed,
                p.replications, p.sim_length, p.base_seed,
            )
            ens = preprocess_ensemble(p.model_id, ens)
            if p.method == METHOD_KDE:
                value = kde_log_likelihood(ens, self.x_emp_processed, p.discard)
            else:
                ds = build_windows(ens, p.lag)
                arch = MdnArchitecture(
                    input_dim=p.lag * ens.dim,
                    hidden=p.hidden,
                    components=p.components,
                    target_dim=ens.dim,
                )
                cfg = replace(p.train, seed=self._train_seed(values))
                model = train(ds, arch, cfg)
                value = mdn_log_likelihood(model, self.x_emp_processed)
            status = "ok"
        except SimulationDivergedError:
            value, status = float("-inf"), "diverged"
        if self._cache is not None:
            self._cache[key] = value
        self._log(values, value, start, status)
        return value

    def __call__(self, theta):
        like = self.log_likelihood(theta)
        if like == float("-inf"):
            return like
        return like + self.log_prior_const

    def _log(self, values, value, start, status):
        wall_ms = (time.perf_counter() - start) * 1000.0
        self.eval_rows.append((tuple(values.tolist()), value, wall_ms, status))


def log_posterior(problem, theta):
    """One-shot evaluation (no cache reuse across calls)."""
    return LogPosterior(problem, cache=False)(theta)
