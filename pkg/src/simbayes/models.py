"""Seed-deterministic simulators for the candidate models.

Three estimation targets are provided: a heterogeneous-beliefs asset
pricing model (price deviations from fundamental value), a random walk
with a structural break, and a two-type fundamentalist/chartist market
model emitting log returns. Two auxiliary generators (i.i.d. log-normal
and an AR(2) recursion) support the lag-saturation diagnostic.

Every simulator is a pure function of (config, T, seed): identical
inputs reproduce the output bit-exactly on a given backend.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import backends
from .errors import InvalidArgumentError, SimulationDivergedError
from .params import ParameterVector
from .rng import rng_from, standard_normal

#: Transient steps discarded by the recursive simulators before the
#: returned series starts. Initial conditions are not part of the model
#: definition, so the warm-up removes dependence on them; the returned
#: length is always exactly T.
WARMUP = 50

#: Any state value beyond this magnitude (or non-finite) is reported as
#: a divergence rather than silently clamped.
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    """A T x n simulated series along with the seed that produced it."""

    data: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise InvalidArgumentError(f"series must be T x n, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("series entries must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def length(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """R Monte Carlo replications sharing shape, with stride-1 seeds.

    Replication i was produced with seed ``base_seed + i``.
    """

    replications: tuple
    base_seed: int
    theta: ParameterVector

    def __post_init__(self):
        reps = tuple(self.replications)
        if not reps:
            raise InvalidArgumentError("ensemble needs at least one replication")
        t0, n0 = reps[0].length, reps[0].dim
        for i, rep in enumerate(reps):
            if rep.length != t0 or rep.dim != n0:
                raise InvalidArgumentError("replications must share T and n")
            if rep.seed != self.base_seed + i:
                raise InvalidArgumentError(
                    f"replication {i} has seed {rep.seed}, expected "
                    f"{self.base_seed + i}"
                )
        object.__setattr__(self, "replications", reps)

    @property
    def size(self):
        return len(self.replications)

    @property
    def length(self):
        return self.replications[0].length

    @property
    def dim(self):
        return self.replications[0].dim


# --------------------------------------------------------------------
# model configurations
# --------------------------------------------------------------------

@dataclass(frozen=True)
class BrockHommesConfig:
    """Discrete-choice belief-switching market in price deviations.

    g/b are the per-strategy trend and bias components (length H),
    beta the switching intensity, r the interest rate, sigma the std of
    the additive price noise.
    """

    g: tuple
    b: tuple
    beta: float = 10.0
    r: float = 0.01
    sigma: float = 0.04
    y_init: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        object.__setattr__(self, "y_init", tuple(float(v) for v in self.y_init))
        if len(self.g) != len(self.b) or not self.g:
            raise InvalidArgumentError("g and b must be equal-length and nonempty")
        if len(self.y_init) != 3:
            raise InvalidArgumentError("y_init must hold three initial deviations")
        if self.beta < 0:
            raise InvalidArgumentError("beta must be >= 0")
        if self.r <= 0:
            raise InvalidArgumentError("r must be > 0")
        if self.sigma < 0:
            raise InvalidArgumentError("sigma must be >= 0")

    @property
    def strategy_count(self):
        return len(self.g)


@dataclass(frozen=True)
class RandomWalkBreakConfig:
    """Random walk whose drift/volatility switch at break time tau."""

    d1: float = 0.0
    d2: float = 0.0
    sigma1: float = 1.0
    sigma2: float = 1.0
    tau: int = 700
    x_init: float = 0.0

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise InvalidArgumentError("volatilities must be >= 0")
        if self.tau < 1:
            raise InvalidArgumentError("tau must be >= 1")


@dataclass(frozen=True)
class FrankeWesterhoffConfig:
    """Fundamentalist/chartist market with switching attractiveness.

    variant 'hpm' uses the herding + predisposition + misalignment rule
    (ignores alpha_w, eta); variant 'wp' uses the wealth +
    predisposition rule (ignores alpha_n, alpha_p). Ignored fields are
    stored but unused.
    """

    variant: str = "hpm"
    mu: float = 0.01
    beta: float = 1.0
    phi: float = 0.12
    chi: float = 1.5
    sigma_f: float = 0.758
    sigma_c: float = 2.087
    alpha_0: float = 0.0
    alpha_n: float = 0.0
    alpha_p: float = 0.0
    alpha_w: float = 0.0
    eta: float = 0.0
    p_star: float = 0.0

    def __post_init__(self):
        if self.variant not in ("hpm", "wp"):
            raise InvalidArgumentError(f"variant must be 'hpm' or 'wp', got {self.variant!r}")
        if self.mu <= 0:
            raise InvalidArgumentError("mu must be > 0")
        for name in ("beta", "phi", "chi", "sigma_f", "sigma_c",
                     "alpha_n", "alpha_p", "alpha_w"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidArgumentError("eta must lie in [0, 1]")


@dataclass(frozen=True)
class LogNormalIidConfig:
    """I.i.d. log-normal draws; ``sigma`` is the std of the log."""

    mu: float = 0.0
    sigma: float = 0.5

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidArgumentError("sigma must be >= 0")


@dataclass(frozen=True)
class Ar2Config:
    """Second-order autoregression with Gaussian innovations."""

    phi1: float = 0.45
    phi2: float = 0.45
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidArgumentError("sigma must be >= 0")


# --------------------------------------------------------------------
# simulators
# --------------------------------------------------------------------

def simulate_brock_hommes(cfg, T, seed):
    """Price-deviation series of the belief-switching market.

    Simulates WARMUP + T steps from cfg.y_init and returns the last T
    deviations as a T x 1 series.
    """
    if T < 4:
        raise InvalidArgumentError("T must be >= 4")
    gen = rng_from(seed)
    eps = cfg.sigma * standard_normal(gen, WARMUP + T)
    y, fail = backends.bh_path(
        np.asarray(cfg.y_init), np.asarray(cfg.g), np.asarray(cfg.b),
        cfg.beta, cfg.r, eps, DIVERGENCE_LIMIT,
    )
    if fail >= 0:
        raise SimulationDivergedError(
            f"belief-switching recursion diverged at step {fail}", step=fail
        )
    return TimeSeriesMatrix(y[WARMUP:], seed)


def simulate_random_walk_break(cfg, T, seed):
    """Structural-break random walk x_1..x_T (no warm-up: the break
    location is part of the data-generating process)."""
    if T <= cfg.tau:
        raise InvalidArgumentError(f"T must exceed tau ({cfg.tau}), got {T}")
    gen = rng_from(seed)
    eps = standard_normal(gen, T)
    t = np.arange(1, T + 1)
    pre = t <= cfg.tau
    drift = np.where(pre, cfg.d1, cfg.d2)
    vol = np.where(pre, cfg.sigma1, cfg.sigma2)
    x = cfg.x_init + np.cumsum(drift + vol * eps)
    return TimeSeriesMatrix(x, seed)


def simulate_franke_westerhoff(cfg, T, seed):
    """Log-return series of the fundamentalist/chartist market.

    Simulates enough periods for WARMUP + T returns starting from the
    fixed initial state (price at fundamental, zero demands/wealth/
    attractiveness) and returns the last T returns as a T x 1 series.
    """
    if T < 4:
        raise InvalidArgumentError("T must be >= 4")
    gen = rng_from(seed)
    steps = WARMUP + T + 1
    noise = standard_normal(gen, (steps, 2))
    rets, _, fail = backends.fw_path(
        cfg.variant == "wp", cfg.mu, cfg.beta, cfg.phi, cfg.chi,
        cfg.alpha_0, cfg.alpha_n, cfg.alpha_p, cfg.alpha_w, cfg.eta,
        cfg.p_star, cfg.sigma_f * noise[:, 0], cfg.sigma_c * noise[:, 1],
        DIVERGENCE_LIMIT,
    )
    if fail >= 0:
        raise SimulationDivergedError(
            f"market recursion diverged at step {fail}", step=fail
        )
    return TimeSeriesMatrix(rets[WARMUP:], seed)


def simulate_lognormal_iid(cfg, T, seed):
    if T < 1:
        raise InvalidArgumentError("T must be >= 1")
    gen = rng_from(seed)
    x = np.exp(cfg.mu + cfg.sigma * standard_normal(gen, T))
    return TimeSeriesMatrix(x, seed)


def simulate_ar2(cfg, T, seed):
    """AR(2) series with zero initial state and the standard warm-up."""
    if T < 3:
        raise InvalidArgumentError("T must be >= 3")
    gen = rng_from(seed)
    eps = cfg.sigma * standard_normal(gen, WARMUP + T)
    x = np.empty(WARMUP + T)
    prev2 = 0.0
    prev1 = 0.0
    for t in range(WARMUP + T):
        cur = cfg.phi1 * prev1 + cfg.phi2 * prev2 + eps[t]
        x[t] = cur
        prev2, prev1 = prev1, cur
    return TimeSeriesMatrix(x[WARMUP:], seed)


# --------------------------------------------------------------------
# parameter binding and the model registry
# --------------------------------------------------------------------

def _apply_theta_brock_hommes(cfg, theta):
    g = list(cfg.g)
    b = list(cfg.b)
    scalars = {}
    for name, value in theta.as_dict().items():
        if name.startswith(("g_", "b_")):
            idx = int(name[2:]) - 1  # strategies are numbered 1..H
            if not 0 <= idx < len(g):
                raise InvalidArgumentError(f"strategy index out of range in {name!r}")
            (g if name[0] == "g" else b)[idx] = value
        elif name in ("beta", "r", "sigma"):
            scalars[name] = value
        else:
            raise InvalidArgumentError(f"unknown parameter {name!r}")
    return replace(cfg, g=tuple(g), b=tuple(b), **scalars)


def _apply_theta_fields(cfg, theta):
    known = set(cfg.__dataclass_fields__)
    updates = {}
    for name, value in theta.as_dict().items():
        if name not in known:
            raise InvalidArgumentError(f"unknown parameter {name!r}")
        updates[name] = value
    return replace(cfg, **updates)


@dataclass(frozen=True)
class ModelSpec:
    """Registry entry: config type, simulator, and estimation transform."""

    config_cls: type
    simulate: callable
    apply_theta: callable
    preprocess: str  # 'none' or 'first_difference'


MODELS = {
    "brock_hommes": ModelSpec(
        BrockHommesConfig, simulate_brock_hommes, _apply_theta_brock_hommes, "none"
    ),
    "random_walk_break": ModelSpec(
        RandomWalkBreakConfig, simulate_random_walk_break, _apply_theta_fields,
        "first_difference"
    ),
    "franke_westerhoff": ModelSpec(
        FrankeWesterhoffConfig, simulate_franke_westerhoff, _apply_theta_fields,
        "none"
    ),
    "lognormal_iid": ModelSpec(
        LogNormalIidConfig, simulate_lognormal_iid, _apply_theta_fields, "none"
    ),
    "ar2": ModelSpec(Ar2Config, simulate_ar2, _apply_theta_fields, "none"),
}


def get_model(model_id):
    try:
        return MODELS[model_id]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown model {model_id!r}; available: {sorted(MODELS)}"
        ) from None


def bind_parameters(model_id, fixed, theta):
    """Config with theta's named values substituted into ``fixed``."""
    return get_model(model_id).apply_theta(fixed, theta)


def generate_ensemble(model_id, theta, fixed, R, T, base_seed):
    """Simulate R replications with seeds base_seed .. base_seed+R-1.

    theta must lie inside its bounds; a diverging replication raises
    with the replication index attached.
    """
    if R < 1:
        raise InvalidArgumentError("R must be >= 1")
    if not theta.inside_bounds():
        raise InvalidArgumentError("theta must lie inside its bounds")
    spec = get_model(model_id)
    cfg = bind_parameters(model_id, fixed, theta)
    reps = []
    for i in range(R):
        try:
            reps.append(spec.simulate(cfg, T, base_seed + i))
        except SimulationDivergedError as err:
            err.replication = i
            raise
    return Ensemble(tuple(reps), base_seed, theta)


def first_difference(series):
    """Series of one-step differences; length T-1."""
    if series.length < 2:
        raise InvalidArgumentError("first difference needs T >= 2")
    return TimeSeriesMatrix(np.diff(series.data, axis=0), series.seed)


def preprocess_series(model_id, series):
    """Apply the model's estimation transform to a simulated series."""
    if get_model(model_id).preprocess == "first_difference":
        return first_difference(series)
    return series


def preprocess_ensemble(model_id, ens):
    if get_model(model_id).preprocess == "none":
        return ens
    reps = tuple(first_difference(rep) for rep in ens.replications)
    return Ensemble(reps, ens.base_seed, ens.theta)
