"""Adaptive population Metropolis-Hastings over a box prior.

A set of N samples is evolved for S iterations. Each iteration draws a
candidate from a Gaussian-kernel density built on the current set,
proposes swapping it with a uniformly chosen member, and accepts with
the usual ratio, where the reverse proposal density is evaluated
against the set with the swap applied. Only the candidate needs a new
posterior evaluation per iteration; member values are cached.
"""

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .errors import InvalidArgumentError
from .params import validate_bounds
from .rng import rng_from, standard_normal, uniform

_CHAIN_STREAM = 202

#: Per-dimension Silverman factor for the proposal kernel, recomputed
#: from the current set every iteration.
BANDWIDTH_FACTOR = 1.06

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 5000
    set_size: int = 70
    burn_in: int = 1500
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.set_size < 1:
            raise InvalidArgumentError("iterations and set_size must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidArgumentError("burn_in must satisfy 0 <= burn_in < S")
        if self.restarts < 1:
            raise InvalidArgumentError("restarts must be >= 1")


@dataclass(eq=False)
class SampleSet:
    """The evolving member matrix (N, d) at iteration ``iteration``."""

    members: np.ndarray
    iteration: int
    log_posts: np.ndarray


@dataclass(eq=False)
class PosteriorSample:
    """Retained draws from all restarts, plus per-restart bookkeeping.

    restart_draws[r] has shape ((S - burn_in) * N, d) with members of
    one retained set stored contiguously in iteration order.
    """

    names: tuple
    restart_draws: tuple
    traces: tuple
    accept_counts: tuple
    out_of_bounds_counts: tuple
    set_size: int

    @property
    def draws(self):
        return np.vstack(self.restart_draws)

    @property
    def size(self):
        return sum(arr.shape[0] for arr in self.restart_draws)

    def restart_means(self):
        return np.vstack([arr.mean(axis=0) for arr in self.restart_draws])

    def acceptance_rate(self):
        total = sum(self.accept_counts)
        iters = len(self.traces[0]) * len(self.traces) if self.traces else 0
        return total / iters if iters else float("nan")


def init_sample_set(bounds, n, gen):
    """N i.i.d. uniform draws from the box; shape (N, d)."""
    bounds = validate_bounds(bounds)
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + (hi - lo) * gen.random((n, bounds.shape[0]))


def _bandwidth(members, widths):
    n = members.shape[0]
    h = BANDWIDTH_FACTOR * members.std(axis=0, ddof=1) * n ** (-0.2)
    # a dimension can collapse if every member shares a value; keep the
    # kernel proper with a tiny floor relative to the box width
    return np.maximum(h, 1e-12 * widths)


def proposal_log_density(members, h, z):
    """log of the product-Gaussian kernel mixture over the set."""
    diff = (z[None, :] - members) / h[None, :]
    comp = -0.5 * (diff * diff).sum(axis=1) - float(np.log(h).sum()) \
        - 0.5 * _LOG_2PI * members.shape[1]
    top = comp.max()
    return float(top + np.log(np.exp(comp - top).sum()) - np.log(members.shape[0]))


def proposal_density(members, h, z):
    """(1/N) sum_n prod_d N(z_d | member_{n,d}, h_d^2)."""
    return float(np.exp(proposal_log_density(members, h, z)))


def propose(members, h, gen):
    """Kernel draw around a uniformly chosen member, plus an
    independently uniform replacement index."""
    n = members.shape[0]
    src = int(gen.integers(n))
    z = members[src] + h * standard_normal(gen, members.shape[1])
    replace_idx = int(gen.integers(n))
    return z, replace_idx


def acceptance_prob(log_post_z, log_post_old, log_q_old_swapped, log_q_z):
    """min(1, ratio) in log space with the documented -inf conventions:
    an out-of-support candidate is never accepted; a candidate with
    support always replaces a member without support; two members
    without support keep the set unchanged."""
    if log_post_z == float("-inf"):
        return 0.0
    if log_post_old == float("-inf"):
        return 1.0
    log_ratio = (log_post_z + log_q_old_swapped) - (log_post_old + log_q_z)
    if log_ratio >= 0.0:
        return 1.0
    return float(np.exp(log_ratio))


def _run_restart(log_post, bounds, cfg, restart):
    bounds = validate_bounds(bounds)
    d = bounds.shape[0]
    lo, hi = bounds[:, 0], bounds[:, 1]
    widths = hi - lo
    gen = rng_from(_CHAIN_STREAM, cfg.seed, restart)
    members = init_sample_set(bounds, cfg.set_size, gen)
    log_posts = np.array([log_post(members[i]) for i in range(cfg.set_size)])

    keep = cfg.iterations - cfg.burn_in
    draws = np.empty((keep * cfg.set_size, d))
    trace = np.empty((cfg.iterations, d + 4))
    accepted_total = 0
    oob_total = 0
    for s in range(1, cfg.iterations + 1):
        h = _bandwidth(members, widths)
        z, n_idx = propose(members, h, gen)
        inside = bool(np.all((z >= lo) & (z <= hi)))
        if not inside:
            # zero prior density: reject without simulating
            oob_total += 1
            accepted = False
            lp_z = float("-inf")
        else:
            lp_z = log_post(z)
            log_q_z = proposal_log_density(members, h, z)
            # the reverse density conditions on the set with the swap
            # applied, including its own bandwidth: this is what makes
            # the ratio an exact Metropolis-Hastings correction
            swapped = members.copy()
            swapped[n_idx] = z
            h_rev = _bandwidth(swapped, widths)
            log_q_old = proposal_log_density(swapped, h_rev, members[n_idx])
            alpha = acceptance_prob(lp_z, log_posts[n_idx], log_q_old, log_q_z)
            accepted = bool(uniform(gen, 0.0, 1.0) < alpha)
        if accepted:
            members[n_idx] = z
            log_posts[n_idx] = lp_z
            accepted_total += 1
        if s > cfg.burn_in:
            base = (s - cfg.burn_in - 1) * cfg.set_size
            draws[base:base + cfg.set_size] = members
        trace[s - 1, 0] = s
        trace[s - 1, 1] = 1.0 if accepted else 0.0
        trace[s - 1, 2] = n_idx
        trace[s - 1, 3:3 + d] = z
        trace[s - 1, 3 + d] = lp_z
    return draws, trace, accepted_total, oob_total


def run_chain(log_post, bounds, cfg, names=None, jobs=1):
    """Evolve ``cfg.restarts`` independent sample sets and pool them.

    ``log_post`` maps a value array to a log posterior (may be -inf).
    Restarts use seeds derived from (cfg.seed, restart) and may run in
    parallel; output ordering is by restart index either way.
    """
    runs = range(cfg.restarts)
    if jobs and jobs > 1 and cfg.restarts > 1:
        results = Parallel(n_jobs=jobs)(
            delayed(_run_restart)(log_post, bounds, cfg, r) for r in runs
        )
    else:
        results = [_run_restart(log_post, bounds, cfg, r) for r in runs]
    draws, traces, acc, oob = zip(*results)
    if names is None:
        names = tuple(f"theta_{i + 1}" for i in range(draws[0].shape[1]))
    return PosteriorSample(tuple(names), tuple(draws), tuple(traces),
                           tuple(acc), tuple(oob), cfg.set_size)


def expectation(sample, g):
    """Plain average of g over every retained member."""
    rows = sample.draws
    if rows.shape[0] == 0:
        raise InvalidArgumentError("posterior sample is empty")
    values = np.asarray([g(rows[i]) for i in range(rows.shape[0])], dtype=float)
    return values.mean(axis=0)


def effective_sample_size(series):
    """ESS of a scalar chain via Geyer's initial-positive-sequence rule."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 3:
        return float(n)
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0.0:
        return float(n)
    acf = np.correlate(x, x, mode="full")[n - 1:] / denom
    tau = 1.0
    k = 1
    while k + 1 < n:
        pair = acf[k] + acf[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        k += 2
    return float(n / tau)
