"""Pure NumPy implementations of the hot kernels.

This is the reference backend: the compiled extension in ``_native.pyx``
implements the same functions with the same contracts, and the test
suite cross-checks the two. Sequential model recursions run as Python
loops here, so this backend is correct but slow for large ensembles.

All kernels are pure functions of their arguments; noise enters only
through pre-drawn arrays so that both backends consume an identical
random stream.
"""

import math

import numpy as np

NAME = "python"

_LOG_2PI = float(np.log(2.0 * np.pi))


def bh_path(y_init, g, b, beta, r, eps, limit):
    """Iterate the heterogeneous-beliefs price-deviation recursion.

    ``y_init`` holds (y[-2], y[-1], y[0]); ``eps`` holds the pre-drawn
    noise (already scaled by the noise std) for steps 1..len(eps).
    Returns (path, fail_step) where path[t-1] = y[t] and fail_step is
    the first 0-based step producing a non-finite or > limit value
    (-1 when none). Strategy weights use a max-shifted softmax.

    Scalar math uses libm (``math.exp``) in the exact operation order of
    the compiled kernel, so both backends produce identical paths.
    """
    steps = eps.shape[0]
    g = [float(v) for v in g]
    b = [float(v) for v in b]
    n_strat = len(g)
    y = np.empty(steps)
    y2, y1, y0 = float(y_init[0]), float(y_init[1]), float(y_init[2])
    big_r = 1.0 + r
    for t in range(steps):
        ry1 = big_r * y1
        top = -math.inf
        logits = [0.0] * n_strat
        for i in range(n_strat):
            logit = beta * ((y0 - ry1) * (g[i] * y2 + b[i] - ry1))
            logits[i] = logit
            if logit > top:
                top = logit
        wsum = 0.0
        num = 0.0
        for i in range(n_strat):
            w = math.exp(logits[i] - top)
            wsum += w
            num += w * (g[i] * y0 + b[i])
        y_next = (num / wsum) / big_r + eps[t]
        if not math.isfinite(y_next) or abs(y_next) > limit:
            return y, t
        y[t] = y_next
        y2, y1, y0 = y1, y0, y_next
    return y, -1


def fw_path(wealth_rule, mu, beta, phi, chi, alpha_0, alpha_n, alpha_p,
            alpha_w, eta, p_star, eps_f, eps_c, limit):
    """Iterate the two-type (fundamentalist/chartist) market recursion.

    ``eps_f``/``eps_c`` are pre-scaled demand shocks for periods
    1..len(eps). Attractiveness follows the herding/predisposition/
    misalignment rule, or the wealth/predisposition rule when
    ``wealth_rule`` is true. Returns (log_returns, frac_fund, fail_step);
    log_returns[t] = p[t+2] - p[t+1], i.e. returns start at period 2.
    """
    steps = eps_f.shape[0]
    rets = np.empty(steps - 1)
    n_f = np.empty(steps - 1)
    p_cur = p_star
    # period-1 block: attractiveness starts at zero, demands are pure noise
    nf_cur = 0.5
    d1f = phi * (p_star - p_cur) + eps_f[0]
    d1c = chi * (p_cur - p_star) + eps_c[0]
    d2f = 0.0
    d2c = 0.0
    w_f = 0.0
    w_c = 0.0
    if wealth_rule:
        a = alpha_w * (w_f - w_c) + alpha_0
    else:
        a = alpha_n * (2.0 * nf_cur - 1.0) + alpha_0 + alpha_p * (p_cur - p_star) ** 2
    for t in range(1, steps):
        p_new = p_cur + mu * (nf_cur * d1f + (1.0 - nf_cur) * d1c)
        x = beta * a
        if x >= 0.0:
            nf_new = 1.0 / (1.0 + math.exp(-x))
        else:
            e = math.exp(x)
            nf_new = e / (1.0 + e)
        df_new = phi * (p_star - p_new) + eps_f[t]
        dc_new = chi * (p_new - p_cur) + eps_c[t]
        if wealth_rule:
            gain = math.exp(p_new) - math.exp(p_cur) if abs(p_new) < 700.0 and abs(p_cur) < 700.0 else math.inf
            w_f = eta * w_f + (1.0 - eta) * (gain * d2f)
            w_c = eta * w_c + (1.0 - eta) * (gain * d2c)
            a = alpha_w * (w_f - w_c) + alpha_0
        else:
            a = (alpha_n * (2.0 * nf_new - 1.0) + alpha_0
                 + alpha_p * (p_new - p_star) * (p_new - p_star))
        bad = (not math.isfinite(p_new) or abs(p_new) > limit
               or not math.isfinite(a) or abs(a) > limit
               or not math.isfinite(w_f) or not math.isfinite(w_c))
        if bad:
            return rets, n_f, t
        rets[t - 1] = p_new - p_cur
        n_f[t - 1] = nf_new
        p_cur = p_new
        d2f, d2c = d1f, d1c
        d1f, d1c = df_new, dc_new
    return rets, n_f, -1


def _forward_pass(ws, bs, x):
    acts = [x]
    pres = []
    h = x
    for w, b in zip(ws, bs):
        z = h @ w + b
        pres.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    return acts, pres


def mdn_forward(ws, bs, head_w, head_b, n_comp, x):
    """Batch forward pass to mixture parameters.

    x: (B, D); head columns are the blocks [alpha | mu | logvar].
    Returns (alpha (B,K), mu (B,K,n), logvar (B,K,n)).
    """
    acts, _ = _forward_pass(ws, bs, x)
    h = acts[-1]
    k = int(n_comp)
    kn = (head_b.shape[0] - k) // 2
    n_out = kn // k
    out = h @ head_w + head_b
    ta = out[:, :k]
    ta = ta - ta.max(axis=1, keepdims=True)
    ea = np.exp(ta)
    alpha = ea / ea.sum(axis=1, keepdims=True)
    mu = out[:, k:k + kn].reshape(-1, k, n_out)
    logvar = out[:, k + kn:].reshape(-1, k, n_out)
    return alpha, mu, logvar


def mixture_log_density(alpha, mu, logvar, y, var_floor):
    """Row-wise log of a diagonal Gaussian mixture density.

    alpha (B,K), mu/logvar (B,K,n), y (B,n). Variances are floored at
    ``var_floor`` before use. Computed via log-sum-exp; may return -inf
    when every component underflows.
    """
    var = np.maximum(np.exp(logvar), var_floor)
    diff = y[:, None, :] - mu
    comp = -0.5 * (
        _LOG_2PI * y.shape[1]
        + np.log(var).sum(axis=2)
        + (diff * diff / var).sum(axis=2)
    )
    with np.errstate(divide="ignore"):
        s = np.where(alpha > 0.0, np.log(np.maximum(alpha, 1e-300)), -np.inf) + comp
    m = s.max(axis=1)
    safe_m = np.where(np.isfinite(m), m, 0.0)
    out = safe_m + np.log(np.exp(s - safe_m[:, None]).sum(axis=1))
    return np.where(np.isfinite(m), out, -np.inf)


def mdn_loss_and_grads(ws, bs, head_w, head_b, n_comp, x, y, var_floor):
    """Mean negative log-density of a batch and its exact gradients.

    Returns (loss, (g_ws, g_bs, g_head_w, g_head_b)) mirroring the
    parameter shapes. The variance floor is applied exactly as in
    evaluation, with zero gradient through floored components.
    """
    batch = x.shape[0]
    k = int(n_comp)
    n_out = y.shape[1]
    kn = k * n_out
    acts, pres = _forward_pass(ws, bs, x)
    h = acts[-1]

    out = h @ head_w + head_b
    ta = out[:, :k]
    shift = ta - ta.max(axis=1, keepdims=True)
    ea = np.exp(shift)
    denom = ea.sum(axis=1, keepdims=True)
    alpha = ea / denom
    log_alpha = shift - np.log(denom)
    mu = out[:, k:k + kn].reshape(batch, k, n_out)
    logvar = out[:, k + kn:].reshape(batch, k, n_out)

    var_raw = np.exp(logvar)
    var = np.maximum(var_raw, var_floor)
    active = var_raw > var_floor
    diff = y[:, None, :] - mu
    quad = diff * diff / var
    comp = -0.5 * (_LOG_2PI * n_out + np.log(var).sum(axis=2) + quad.sum(axis=2))
    s = log_alpha + comp
    m = s.max(axis=1, keepdims=True)
    log_dens = (m + np.log(np.exp(s - m).sum(axis=1, keepdims=True)))[:, 0]
    loss = -float(log_dens.mean())

    resp = np.exp(s - log_dens[:, None])
    scale = 1.0 / batch
    d_out = np.empty((batch, k + 2 * kn))
    d_out[:, :k] = (alpha - resp) * scale
    d_out[:, k:k + kn] = ((resp[:, :, None] * (mu - y[:, None, :]) / var)
                          * scale).reshape(batch, kn)
    d_out[:, k + kn:] = ((resp[:, :, None] * 0.5 * (1.0 - quad))
                         * np.where(active, scale, 0.0)).reshape(batch, kn)

    g_head_w = h.T @ d_out
    g_head_b = d_out.sum(axis=0)
    dh = d_out @ head_w.T
    g_ws = [None] * len(ws)
    g_bs = [None] * len(bs)
    for layer in range(len(ws) - 1, -1, -1):
        dz = dh * (pres[layer] > 0.0)
        g_ws[layer] = acts[layer].T @ dz
        g_bs[layer] = dz.sum(axis=0)
        dh = dz @ ws[layer].T
    return loss, (g_ws, g_bs, g_head_w, g_head_b)


def adam_update(params, grads, m, v, step, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam over parallel lists of arrays."""
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    for p, g, m_a, v_a in zip(params, grads, m, v):
        m_a *= beta1
        m_a += (1.0 - beta1) * g
        v_a *= beta2
        v_a += (1.0 - beta2) * (g * g)
        p -= lr * (m_a / c1) / (np.sqrt(v_a / c2) + eps)


def kde_log_density(sample_sorted, h, queries):
    """Log Gaussian-KDE density at each query point.

    ``sample_sorted`` must be ascending; summation is over the sorted
    order so the result is independent of the original sample order.
    """
    m = sample_sorted.shape[0]
    const = -np.log(m) - np.log(h) - 0.5 * _LOG_2PI
    out = np.empty(queries.shape[0])
    chunk = max(1, (1 << 22) // m)
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        z = (q[:, None] - sample_sorted[None, :]) / h
        e = -0.5 * z * z
        top = e.max(axis=1, keepdims=True)
        out[start:start + chunk] = (
            top[:, 0] + np.log(np.exp(e - top).sum(axis=1)) + const
        )
    return out
