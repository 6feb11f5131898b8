"""Mixture density network: forward pass, exact gradients, training,
and likelihood evaluation with the whitening correction factor.

The network is a plain ReLU feedforward stack whose head emits mixture
weights (softmax), component means, and component log variances for a
diagonal Gaussian mixture over the next observation given a lag window.
All heavy math is delegated to the active kernel backend.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backends
from .errors import InvalidArgumentError, TrainingDivergedError
from .rng import rng_from
from .windows import (NormStats, apply_noise, compute_norm_stats,
                      dataset_from_series, normalize)

#: Variances are floored here in training and evaluation alike, so
#: gradients and likelihoods describe the same function.
VAR_FLOOR = 1e-8

_INIT_STREAM = 101
_LOOP_STREAM = 102


@dataclass(frozen=True)
class MdnArchitecture:
    """Network shape: input width, hidden widths, mixture size."""

    input_dim: int
    hidden: tuple = (32, 32, 32)
    components: int = 16
    target_dim: int = 1
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.target_dim < 1:
            raise InvalidArgumentError("input_dim and target_dim must be >= 1")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise InvalidArgumentError("hidden must be a nonempty tuple of widths")
        if self.components < 1:
            raise InvalidArgumentError("need at least one mixture component")
        if self.activation != "relu":
            raise InvalidArgumentError("only the relu activation is supported")


@dataclass(eq=False)
class MdnParams:
    """All weights and biases of the network and its mixture head.

    The three head maps (mixture logits, means, log variances) are
    stored as one matrix of column blocks [alpha | mu | logvar]; the
    named accessors expose them as views, so mutating a view mutates
    the parameters.
    """

    hidden_w: list
    hidden_b: list
    head_w: np.ndarray
    head_b: np.ndarray
    components: int

    @property
    def w_alpha(self):
        return self.head_w[:, :self.components]

    @property
    def b_alpha(self):
        return self.head_b[:self.components]

    @property
    def w_mu(self):
        k = self.components
        kn = (self.head_w.shape[1] - k) // 2
        return self.head_w[:, k:k + kn]

    @property
    def b_mu(self):
        k = self.components
        kn = (self.head_b.shape[0] - k) // 2
        return self.head_b[k:k + kn]

    @property
    def w_logvar(self):
        k = self.components
        kn = (self.head_w.shape[1] - k) // 2
        return self.head_w[:, k + kn:]

    @property
    def b_logvar(self):
        k = self.components
        kn = (self.head_b.shape[0] - k) // 2
        return self.head_b[k + kn:]

    def arrays(self):
        """All parameter arrays in a fixed canonical order."""
        out = []
        for w, b in zip(self.hidden_w, self.hidden_b):
            out.extend((w, b))
        out.extend((self.head_w, self.head_b))
        return out

    def copy(self):
        return _params_from_arrays([a.copy() for a in self.arrays()],
                                   len(self.hidden_w), self.components)

    def count(self):
        return int(sum(a.size for a in self.arrays()))


def _params_from_arrays(arrays, n_hidden, components):
    hw = [arrays[2 * i] for i in range(n_hidden)]
    hb = [arrays[2 * i + 1] for i in range(n_hidden)]
    return MdnParams(hw, hb, arrays[2 * n_hidden], arrays[2 * n_hidden + 1],
                     components)


@dataclass(frozen=True, eq=False)
class MixtureOutput:
    """Mixture parameters for one window: weights, means, log variances."""

    alpha: np.ndarray
    mu: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        if np.any(self.alpha <= 0) or abs(float(self.alpha.sum()) - 1.0) > 1e-9:
            raise InvalidArgumentError("mixture weights must be positive and sum to 1")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 12
    batch_size: int = 512
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    eta_x: float = 0.2
    eta_y: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidArgumentError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")


@dataclass(eq=False)
class AdamState:
    step: int
    m: list
    v: list


@dataclass(eq=False)
class TrainedMdn:
    """Trained parameters bundled with the stats that whitened the data."""

    params: MdnParams
    stats: NormStats
    arch: MdnArchitecture
    lag: int
    epoch_losses: tuple = field(default_factory=tuple)


def init_network(arch, seed):
    """Fan-in-scaled symmetric weight init; biases start at zero.

    Zero log-variance biases give unit initial component variances.
    Deterministic for a given seed.
    """
    gen = rng_from(_INIT_STREAM, seed)

    def layer(fan_in, fan_out):
        scale = 1.0 / np.sqrt(fan_in)
        w = (2.0 * gen.random((fan_in, fan_out)) - 1.0) * scale
        return w, np.zeros(fan_out)

    hw, hb = [], []
    prev = arch.input_dim
    for width in arch.hidden:
        w, b = layer(prev, width)
        hw.append(w)
        hb.append(b)
        prev = width
    k, n = arch.components, arch.target_dim
    head_w, head_b = layer(prev, k + 2 * k * n)
    return MdnParams(hw, hb, head_w, head_b, k)


def _as_batch(x, dim, name):
    arr = np.ascontiguousarray(np.asarray(x, dtype=float))
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InvalidArgumentError(f"{name} must have {dim} columns, got {arr.shape}")
    return arr


def forward(params, window):
    """Mixture parameters for a single window (alpha via max-shifted
    softmax, means and log variances affine in the last activation)."""
    x = _as_batch(window, params.hidden_w[0].shape[0], "window")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("window must be finite")
    alpha, mu, logvar = backends.mdn_forward(
        params.hidden_w, params.hidden_b, params.head_w, params.head_b,
        params.components, x,
    )
    return MixtureOutput(alpha[0], mu[0], logvar[0])


def forward_batch(params, x):
    return backends.mdn_forward(
        params.hidden_w, params.hidden_b, params.head_w, params.head_b,
        params.components, np.ascontiguousarray(x),
    )


def mixture_log_density(mix, y):
    """log sum_k alpha_k N(y | mu_k, diag(sigma_k^2)), via log-sum-exp."""
    y_arr = np.asarray(y, dtype=float).reshape(1, -1)
    out = backends.mixture_log_density(
        mix.alpha.reshape(1, -1),
        np.ascontiguousarray(mix.mu.reshape(1, *mix.mu.shape)),
        np.ascontiguousarray(mix.log_var.reshape(1, *mix.log_var.shape)),
        y_arr, VAR_FLOOR,
    )
    return float(out[0])


def nll_and_gradients(params, x, y):
    """Mean negative log-density of a batch and its analytic gradients.

    Gradients come back in an MdnParams-shaped container and are exact
    derivatives of the floored-variance loss.
    """
    x = _as_batch(x, params.hidden_w[0].shape[0], "inputs")
    y = _as_batch(y, params.b_mu.shape[0] // params.components, "targets")
    if x.shape[0] == 0:
        raise InvalidArgumentError("batch must be nonempty")
    loss, grads = backends.mdn_loss_and_grads(
        params.hidden_w, params.hidden_b, params.head_w, params.head_b,
        params.components, x, y, VAR_FLOOR,
    )
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite loss {loss}")
    g_ws, g_bs, g_head_w, g_head_b = grads
    return loss, MdnParams(list(g_ws), list(g_bs), g_head_w, g_head_b,
                           params.components)


def init_adam(params):
    return AdamState(
        0,
        [np.zeros_like(a) for a in params.arrays()],
        [np.zeros_like(a) for a in params.arrays()],
    )


def adam_step(state, params, grads, cfg):
    """One bias-corrected Adam update; returns fresh (params, state)."""
    t = state.step + 1
    c1 = 1.0 - cfg.beta1 ** t
    c2 = 1.0 - cfg.beta2 ** t
    new_arrays, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
        step = cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.epsilon)
        new_arrays.append(p - step)
        new_m.append(m)
        new_v.append(v)
    return (_params_from_arrays(new_arrays, len(params.hidden_w),
                                params.components),
            AdamState(t, new_m, new_v))


def _adam_update_inplace(state, params, grads, cfg):
    """Hot-loop Adam step mutating params and state arrays."""
    state.step += 1
    backends.adam_update(params.arrays(), grads.arrays(), state.m, state.v,
                         state.step, cfg.learning_rate, cfg.beta1, cfg.beta2,
                         cfg.epsilon)


def train(ds, arch, cfg):
    """Fit the network by noisy mini-batch maximum likelihood.

    Pipeline: whiten the dataset with its own statistics, then per
    epoch shuffle, perturb every example with fresh Gaussian noise
    (drawn once per epoch, consumed batch by batch), and take one Adam
    step per batch. The final partial batch is kept, and the
    final-epoch parameters are returned (there is no held-out set;
    noise regularization replaces early stopping).
    """
    if arch.input_dim != ds.inputs.shape[1] or arch.target_dim != ds.targets.shape[1]:
        raise InvalidArgumentError("architecture does not match dataset shape")
    stats = compute_norm_stats(ds)
    normed = normalize(ds, stats)
    x_all = np.ascontiguousarray(normed.inputs)
    y_all = np.ascontiguousarray(normed.targets)

    params = init_network(arch, cfg.seed)
    state = init_adam(params)
    gen = rng_from(_LOOP_STREAM, cfg.seed)
    m_total = ds.size
    epoch_losses = []
    for epoch in range(cfg.epochs):
        order = gen.permutation(m_total)
        x_epoch = x_all[order]
        y_epoch = y_all[order]
        x_epoch, y_epoch = apply_noise(x_epoch, y_epoch, cfg.eta_x, cfg.eta_y, gen)
        running = 0.0
        for start in range(0, m_total, cfg.batch_size):
            stop = min(start + cfg.batch_size, m_total)
            try:
                loss, grads = nll_and_gradients(
                    params, x_epoch[start:stop], y_epoch[start:stop])
            except TrainingDivergedError as err:
                err.epoch = epoch
                err.batch = start // cfg.batch_size
                raise
            _adam_update_inplace(state, params, grads, cfg)
            running += loss * (stop - start)
        epoch_losses.append(running / m_total)
    return TrainedMdn(params, stats, arch, ds.lag, tuple(epoch_losses))


def eval_log_density_batch(model, x, y):
    """Log density in data units for batches of windows and targets.

    Whitens with the stored statistics, evaluates the mixture, and
    subtracts log prod(sigma_y) — the Jacobian of the whitening map.
    """
    stats = model.stats
    xn = (np.ascontiguousarray(x, dtype=float) - stats.mu_x) / stats.sigma_x
    yn = (np.ascontiguousarray(y, dtype=float) - stats.mu_y) / stats.sigma_y
    alpha, mu, logvar = forward_batch(model.params, xn)
    logdens = backends.mixture_log_density(alpha, mu, logvar, yn, VAR_FLOOR)
    return logdens - float(np.log(stats.sigma_y).sum())


def eval_density(model, x, y):
    """Conditional density (not log) of target y given window x."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(np.exp(eval_log_density_batch(model, x, y)[0]))


def mdn_log_likelihood(model, series):
    """Sum of conditional log densities over all windows of a series.

    Returns -inf when any factor underflows to zero density.
    """
    if series.length <= model.lag:
        raise InvalidArgumentError(
            f"series length {series.length} must exceed lag {model.lag}"
        )
    ds = dataset_from_series(series, model.lag)
    logdens = eval_log_density_batch(model, ds.inputs, ds.targets)
    if not np.all(np.isfinite(logdens)):
        return float("-inf")
    return float(logdens.sum())


def save_model(model, path):
    """Serialize a trained model to an .npz archive (bit-exact)."""
    payload = {
        "hidden": np.asarray(model.arch.hidden, dtype=np.int64),
        "input_dim": np.asarray(model.arch.input_dim, dtype=np.int64),
        "components": np.asarray(model.arch.components, dtype=np.int64),
        "target_dim": np.asarray(model.arch.target_dim, dtype=np.int64),
        "lag": np.asarray(model.lag, dtype=np.int64),
        "mu_x": model.stats.mu_x,
        "sigma_x": model.stats.sigma_x,
        "mu_y": model.stats.mu_y,
        "sigma_y": model.stats.sigma_y,
        "degenerate_x": model.stats.degenerate_x,
        "degenerate_y": model.stats.degenerate_y,
        "epoch_losses": np.asarray(model.epoch_losses),
    }
    for i, (w, b) in enumerate(zip(model.params.hidden_w, model.params.hidden_b)):
        payload[f"w_{i}"] = w
        payload[f"b_{i}"] = b
    payload["head_w"] = model.params.head_w
    payload["head_b"] = model.params.head_b
    np.savez(path, **payload)


def load_model(path):
    with np.load(path) as data:
        arch = MdnArchitecture(
            int(data["input_dim"]),
            tuple(int(h) for h in data["hidden"]),
            int(data["components"]),
            int(data["target_dim"]),
        )
        stats = NormStats(
            data["mu_x"], data["sigma_x"], data["mu_y"], data["sigma_y"],
            data["degenerate_x"], data["degenerate_y"],
        )
        hw = [data[f"w_{i}"] for i in range(len(arch.hidden))]
        hb = [data[f"b_{i}"] for i in range(len(arch.hidden))]
        params = MdnParams(hw, hb, data["head_w"], data["head_b"],
                           arch.components)
        return TrainedMdn(params, stats, arch, int(data["lag"]),
                          tuple(float(v) for v in data["epoch_losses"]))
