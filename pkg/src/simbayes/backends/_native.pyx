# cython: language_level=3
"""Compiled kernels: model recursions, MDN forward/backward, KDE eval.

Contracts match ``pure.py`` one for one; the scalar recursions follow
the same operation order (and the build disables FP contraction) so
paths agree bit-for-bit with the pure backend. Matrix products go
through BLAS dgemm.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp, fabs, isfinite, log, sqrt, INFINITY
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "native"

cdef double LOG_2PI = 1.8378770664093453


cdef inline void _gemm(bint ta, bint tb,
                       const double* a, int a_rows, int a_cols,
                       const double* b, int b_rows, int b_cols,
                       double* c, int c_rows, int c_cols,
                       double beta) noexcept nogil:
    # row-major C = op(A) @ op(B) + beta * C via column-major dgemm on
    # the transposed views
    cdef char fa = b'T' if tb else b'N'
    cdef char fb = b'T' if ta else b'N'
    cdef int m = c_cols
    cdef int n = c_rows
    cdef int k = a_rows if ta else a_cols
    cdef double one = 1.0
    cdef int lda = b_cols
    cdef int ldb = a_cols
    cdef int ldc = c_cols
    dgemm(&fa, &fb, &m, &n, &k, &one, <double*> b, &lda, <double*> a, &ldb, &beta, c, &ldc)


def bh_path(y_init, g, b, double beta, double r, eps, double limit):
    """See ``pure.bh_path``."""
    cdef const double[::1] g_v = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[::1] b_v = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] eps_v = np.ascontiguousarray(eps, dtype=np.float64)
    cdef int steps = eps_v.shape[0]
    cdef int n_strat = g_v.shape[0]
    out = np.empty(steps)
    cdef double[::1] y = out
    cdef double y2 = y_init[0]
    cdef double y1 = y_init[1]
    cdef double y0 = y_init[2]
    cdef double big_r = 1.0 + r
    cdef double ry1, top, logit, wsum, num, w, y_next
    cdef double[::1] logits = np.empty(n_strat)
    cdef int t, i
    for t in range(steps):
        ry1 = big_r * y1
        top = -INFINITY
        for i in range(n_strat):
            logit = beta * ((y0 - ry1) * (g_v[i] * y2 + b_v[i] - ry1))
            logits[i] = logit
            if logit > top:
                top = logit
        wsum = 0.0
        num = 0.0
        for i in range(n_strat):
            w = exp(logits[i] - top)
            wsum += w
            num += w * (g_v[i] * y0 + b_v[i])
        y_next = (num / wsum) / big_r + eps_v[t]
        if not isfinite(y_next) or fabs(y_next) > limit:
            return out, t
        y[t] = y_next
        y2 = y1
        y1 = y0
        y0 = y_next
    return out, -1


def fw_path(bint wealth_rule, double mu, double beta, double phi, double chi,
            double alpha_0, double alpha_n, double alpha_p, double alpha_w,
            double eta, double p_star, eps_f, eps_c, double limit):
    """See ``pure.fw_path``."""
    cdef const double[::1] ef = np.ascontiguousarray(eps_f, dtype=np.float64)
    cdef const double[::1] ec = np.ascontiguousarray(eps_c, dtype=np.float64)
    cdef int steps = ef.shape[0]
    rets_arr = np.empty(steps - 1)
    nf_arr = np.empty(steps - 1)
    cdef double[::1] rets = rets_arr
    cdef double[::1] n_f = nf_arr
    cdef double p_cur = p_star
    cdef double nf_cur = 0.5
    cdef double d1f = phi * (p_star - p_cur) + ef[0]
    cdef double d1c = chi * (p_cur - p_star) + ec[0]
    cdef double d2f = 0.0
    cdef double d2c = 0.0
    cdef double w_f = 0.0
    cdef double w_c = 0.0
    cdef double a
    if wealth_rule:
        a = alpha_w * (w_f - w_c) + alpha_0
    else:
        a = alpha_n * (2.0 * nf_cur - 1.0) + alpha_0 + alpha_p * (p_cur - p_star) * (p_cur - p_star)
    cdef double p_new, x, e, nf_new, df_new, dc_new, gain
    cdef bint bad
    cdef int t
    for t in range(1, steps):
        p_new = p_cur + mu * (nf_cur * d1f + (1.0 - nf_cur) * d1c)
        x = beta * a
        if x >= 0.0:
            nf_new = 1.0 / (1.0 + exp(-x))
        else:
            e = exp(x)
            nf_new = e / (1.0 + e)
        df_new = phi * (p_star - p_new) + ef[t]
        dc_new = chi * (p_new - p_cur) + ec[t]
        if wealth_rule:
            if fabs(p_new) < 700.0 and fabs(p_cur) < 700.0:
                gain = exp(p_new) - exp(p_cur)
            else:
                gain = INFINITY
            w_f = eta * w_f + (1.0 - eta) * (gain * d2f)
            w_c = eta * w_c + (1.0 - eta) * (gain * d2c)
            a = alpha_w * (w_f - w_c) + alpha_0
        else:
            a = (alpha_n * (2.0 * nf_new - 1.0) + alpha_0
                 + alpha_p * (p_new - p_star) * (p_new - p_star))
        bad = (not isfinite(p_new) or fabs(p_new) > limit
               or not isfinite(a) or fabs(a) > limit
               or not isfinite(w_f) or not isfinite(w_c))
        if bad:
            return rets_arr, nf_arr, t
        rets[t - 1] = p_new - p_cur
        n_f[t - 1] = nf_new
        p_cur = p_new
        d2f = d1f
        d2c = d1c
        d1f = df_new
        d1c = dc_new
    return rets_arr, nf_arr, -1


cdef void _dense_relu(const double[:, ::1] inp, const double[:, ::1] w,
                      const double[::1] b, double[:, ::1] pre,
                      double[:, ::1] act) noexcept nogil:
    cdef int rows = inp.shape[0]
    cdef int cols = w.shape[1]
    cdef int i, j
    cdef double z
    _gemm(False, False, &inp[0, 0], inp.shape[0], inp.shape[1],
          &w[0, 0], w.shape[0], w.shape[1], &pre[0, 0], rows, cols, 0.0)
    for i in range(rows):
        for j in range(cols):
            z = pre[i, j] + b[j]
            pre[i, j] = z
            act[i, j] = z if z > 0.0 else 0.0


cdef void _affine(const double[:, ::1] inp, const double[:, ::1] w,
                  const double[::1] b, double[:, ::1] out) noexcept nogil:
    cdef int rows = inp.shape[0]
    cdef int cols = w.shape[1]
    cdef int i, j
    _gemm(False, False, &inp[0, 0], inp.shape[0], inp.shape[1],
          &w[0, 0], w.shape[0], w.shape[1], &out[0, 0], rows, cols, 0.0)
    for i in range(rows):
        for j in range(cols):
            out[i, j] += b[j]


def _hidden_stack(ws, bs, x):
    # note: no negative list indexing anywhere in this module, the
    # wraparound directive is off
    cur = np.ascontiguousarray(x, dtype=np.float64)
    acts = [cur]
    pres = []
    cdef const double[:, ::1] inp
    cdef const double[:, ::1] w_v
    cdef const double[::1] b_v
    cdef double[:, ::1] pre_v
    cdef double[:, ::1] act_v
    for w, b in zip(ws, bs):
        inp = cur
        w_v = w
        b_v = b
        pre = np.empty((inp.shape[0], w_v.shape[1]))
        act = np.empty_like(pre)
        pre_v = pre
        act_v = act
        _dense_relu(inp, w_v, b_v, pre_v, act_v)
        pres.append(pre)
        acts.append(act)
        cur = act
    return acts, pres


def mdn_forward(ws, bs, head_w, head_b, n_comp, x):
    """See ``pure.mdn_forward``."""
    acts, _ = _hidden_stack(ws, bs, x)
    h = acts[len(acts) - 1]
    cdef int batch = h.shape[0]
    cdef int k = n_comp
    cdef int kn = (head_b.shape[0] - k) // 2
    cdef int n_out = kn // k
    out = np.empty((batch, k + 2 * kn))
    cdef double[:, ::1] h_v = h
    cdef double[:, ::1] out_v = out
    _affine(h_v, head_w, head_b, out_v)
    alpha = np.empty((batch, k))
    cdef double[:, ::1] al_v = alpha
    cdef int i, j
    cdef double top, s
    with nogil:
        for i in range(batch):
            top = -INFINITY
            for j in range(k):
                if out_v[i, j] > top:
                    top = out_v[i, j]
            s = 0.0
            for j in range(k):
                al_v[i, j] = exp(out_v[i, j] - top)
                s += al_v[i, j]
            for j in range(k):
                al_v[i, j] /= s
    mu = out[:, k:k + kn].reshape(batch, k, n_out)
    logvar = out[:, k + kn:].reshape(batch, k, n_out)
    return alpha, mu, logvar


def mixture_log_density(alpha, mu, logvar, y, double var_floor):
    """See ``pure.mixture_log_density``."""
    cdef const double[:, ::1] al_v = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef int batch = al_v.shape[0]
    cdef int k = al_v.shape[1]
    mu3 = np.ascontiguousarray(mu, dtype=np.float64).reshape(batch, k, -1)
    lv3 = np.ascontiguousarray(logvar, dtype=np.float64).reshape(batch, k, -1)
    cdef const double[:, :, ::1] mu_v = mu3
    cdef const double[:, :, ::1] lv_v = lv3
    cdef const double[:, ::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef int n_out = y_v.shape[1]
    out = np.empty(batch)
    cdef double[::1] out_v = out
    cdef int i, j, c
    cdef double comp, var, diff, s, top, acc
    cdef double[::1] sbuf = np.empty(k)
    for i in range(batch):
        top = -INFINITY
        for c in range(k):
            comp = 0.0
            for j in range(n_out):
                var = exp(lv_v[i, c, j])
                if var < var_floor:
                    var = var_floor
                diff = y_v[i, j] - mu_v[i, c, j]
                comp += log(var) + diff * diff / var
            comp = -0.5 * (LOG_2PI * n_out + comp)
            if al_v[i, c] > 0.0:
                s = log(al_v[i, c]) + comp
            else:
                s = -INFINITY
            sbuf[c] = s
            if s > top:
                top = s
        if top == -INFINITY:
            out_v[i] = -INFINITY
            continue
        acc = 0.0
        for c in range(k):
            acc += exp(sbuf[c] - top)
        out_v[i] = top + log(acc)
    return out


def mdn_loss_and_grads(ws, bs, head_w, head_b, n_comp, x, y, double var_floor):
    """See ``pure.mdn_loss_and_grads``."""
    acts, pres = _hidden_stack(ws, bs, x)
    h = acts[len(acts) - 1]
    cdef int batch = h.shape[0]
    cdef int k = n_comp
    cdef const double[:, ::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef int n_out = y_v.shape[1]
    cdef int kn = k * n_out
    cdef int width = k + 2 * kn

    out = np.empty((batch, width))
    cdef double[:, ::1] h_v = h
    cdef double[:, ::1] out_v = out
    _affine(h_v, head_w, head_b, out_v)

    # SIMD exp over the logvar block; scalar transcendentals are the
    # bottleneck at this batch shape
    var_raw = np.exp(out[:, k + kn:])
    cdef double[:, ::1] vraw_v = var_raw

    d_out = np.empty((batch, width))
    s_arr = np.empty((batch, k))
    cdef double[:, ::1] dout_v = d_out
    cdef double[:, ::1] s_v = s_arr
    cdef double[::1] srow_top = np.empty(batch)
    cdef double log_floor = log(var_floor)
    cdef double scale = 1.0 / batch
    cdef int i, c, j, idx
    cdef double top, scomp, var, diff, asum, log_asum
    cdef double resp, vraw
    with nogil:
        for i in range(batch):
            # softmax logits -> log alpha (max-shifted); the logits are
            # shifted in place, alpha is recovered vectorized below
            top = -INFINITY
            for c in range(k):
                if out_v[i, c] > top:
                    top = out_v[i, c]
            asum = 0.0
            for c in range(k):
                out_v[i, c] = out_v[i, c] - top
                asum += exp(out_v[i, c])
            log_asum = log(asum)
            for c in range(k):
                scomp = 0.0
                for j in range(n_out):
                    idx = c * n_out + j
                    vraw = vraw_v[i, idx]
                    if vraw > var_floor:
                        var = vraw
                        scomp += out_v[i, k + kn + idx]
                    else:
                        var = var_floor
                        scomp += log_floor
                    # keep the floored variance and the residual for the
                    # gradient pass (mu block becomes y - mu)
                    vraw_v[i, idx] = var
                    diff = y_v[i, j] - out_v[i, k + idx]
                    out_v[i, k + idx] = diff
                    scomp += diff * diff / var
                s_v[i, c] = (out_v[i, c] - log_asum) - 0.5 * (LOG_2PI * n_out + scomp)
            top = -INFINITY
            for c in range(k):
                if s_v[i, c] > top:
                    top = s_v[i, c]
            srow_top[i] = top

    # responsibilities r = exp(s - logsumexp(s)) and alpha = softmax
    exp_s = np.exp(s_arr - np.asarray(srow_top)[:, None])
    row_sum = exp_s.sum(axis=1)
    log_dens = np.asarray(srow_top) + np.log(row_sum)
    loss_sum = float(log_dens.sum())
    resp_arr = exp_s / row_sum[:, None]
    alpha_arr = np.exp(out[:, :k])
    alpha_arr /= alpha_arr.sum(axis=1)[:, None]
    cdef double[:, ::1] resp_v = resp_arr
    cdef double[:, ::1] alpha_v = alpha_arr
    g_head_b = np.zeros(width)
    cdef double[::1] ghb_v = g_head_b
    with nogil:
        for i in range(batch):
            for c in range(k):
                resp = resp_v[i, c]
                dout_v[i, c] = (alpha_v[i, c] - resp) * scale
                ghb_v[c] += dout_v[i, c]
                for j in range(n_out):
                    idx = c * n_out + j
                    var = vraw_v[i, idx]
                    diff = out_v[i, k + idx]
                    dout_v[i, k + idx] = resp * scale * (-diff) / var
                    ghb_v[k + idx] += dout_v[i, k + idx]
                    if var > var_floor:
                        dout_v[i, k + kn + idx] = resp * scale * 0.5 * (1.0 - diff * diff / var)
                    else:
                        dout_v[i, k + kn + idx] = 0.0
                    ghb_v[k + kn + idx] += dout_v[i, k + kn + idx]
    loss = -loss_sum / batch

    g_head_w = np.empty((h.shape[1], width))
    cdef double[:, ::1] ghw_v = g_head_w
    _gemm(True, False, &h_v[0, 0], batch, h_v.shape[1],
          &dout_v[0, 0], batch, width, &ghw_v[0, 0], h_v.shape[1], width, 0.0)

    # backprop into the hidden stack
    dh = np.empty((batch, h.shape[1]))
    cdef double[:, ::1] dh_v = dh
    cdef const double[:, ::1] hw_v = head_w
    _gemm(False, True, &dout_v[0, 0], batch, width,
          &hw_v[0, 0], hw_v.shape[0], hw_v.shape[1], &dh_v[0, 0], batch, h.shape[1], 0.0)

    n_layers = len(ws)
    g_ws = [None] * n_layers
    g_bs = [None] * n_layers
    cdef double[:, ::1] pre_v
    cdef const double[:, ::1] act_v
    cdef double[:, ::1] gw_v
    cdef double[::1] gb_v
    cdef const double[:, ::1] w_v
    cdef double[:, ::1] prev_dh
    cdef int rows, cols
    for layer in range(n_layers - 1, -1, -1):
        pre_v = pres[layer]
        rows = pre_v.shape[0]
        cols = pre_v.shape[1]
        gb = np.zeros(cols)
        gb_v = gb
        with nogil:
            for i in range(rows):
                for j in range(cols):
                    if pre_v[i, j] <= 0.0:
                        dh_v[i, j] = 0.0
                    gb_v[j] += dh_v[i, j]
        act_prev = acts[layer]
        act_v = act_prev
        gw = np.empty((act_v.shape[1], cols))
        gw_v = gw
        _gemm(True, False, &act_v[0, 0], rows, act_v.shape[1],
              &dh_v[0, 0], rows, cols, &gw_v[0, 0], act_v.shape[1], cols, 0.0)
        g_ws[layer] = gw
        g_bs[layer] = gb
        if layer > 0:
            w_v = ws[layer]
            new_dh = np.empty((batch, w_v.shape[0]))
            prev_dh = new_dh
            _gemm(False, True, &dh_v[0, 0], batch, cols,
                  &w_v[0, 0], w_v.shape[0], w_v.shape[1],
                  &prev_dh[0, 0], batch, w_v.shape[0], 0.0)
            dh = new_dh
            dh_v = prev_dh
    return loss, (g_ws, g_bs, g_head_w, g_head_b)


def adam_update(params, grads, m, v, long step, double lr, double beta1,
                double beta2, double eps):
    """See ``pure.adam_update``; same per-element expression tree."""
    cdef double c1 = 1.0 - beta1 ** step
    cdef double c2 = 1.0 - beta2 ** step
    cdef double[::1] p_v
    cdef const double[::1] g_v
    cdef double[::1] m_v
    cdef double[::1] v_v
    cdef Py_ssize_t i, n
    cdef double g, mm, vv
    for p_a, g_a, m_a, v_a in zip(params, grads, m, v):
        p_v = p_a.reshape(-1)
        g_v = g_a.reshape(-1)
        m_v = m_a.reshape(-1)
        v_v = v_a.reshape(-1)
        n = p_v.shape[0]
        with nogil:
            for i in range(n):
                g = g_v[i]
                mm = beta1 * m_v[i]
                mm = mm + (1.0 - beta1) * g
                vv = beta2 * v_v[i]
                vv = vv + (1.0 - beta2) * (g * g)
                m_v[i] = mm
                v_v[i] = vv
                p_v[i] = p_v[i] - lr * (mm / c1) / (sqrt(vv / c2) + eps)
    return None


def kde_log_density(sample_sorted, double h, queries):
    """See ``pure.kde_log_density``."""
    cdef const double[::1] v = np.ascontiguousarray(sample_sorted, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef int m = v.shape[0]
    cdef int nq = q.shape[0]
    out = np.empty(nq)
    cdef double[::1] out_v = out
    cdef double const = -log(<double> m) - log(h) - 0.5 * LOG_2PI
    cdef int i, j, lo, hi, mid
    cdef double x, z, best, acc, cand
    for i in prange(nq, nogil=True, schedule="static"):
        x = q[i]
        # nearest sample gives the largest kernel exponent
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            if v[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        best = -INFINITY
        if lo < m:
            z = (x - v[lo]) / h
            best = -0.5 * z * z
        if lo > 0:
            z = (x - v[lo - 1]) / h
            cand = -0.5 * z * z
            if cand > best:
                best = cand
        acc = 0.0
        for j in range(m):
            z = (x - v[j]) / h
            acc = acc + exp(-0.5 * z * z - best)
        out_v[i] = best + log(acc) + const
    return out
