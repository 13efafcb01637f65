"""Naive loop implementations used as independent oracles in tests.

Everything here recomputes the package's tensor contractions with explicit
index loops (plain dense affine maps may use numpy); none of it shares code
with the implementation under test.
"""

import numpy as np


def rigid_distance_loop(si, ti, sj, tj):
    ds = np.sqrt(sum((si[k] - sj[k]) ** 2 for k in range(3)))
    dt = np.sqrt(sum((ti[k] - tj[k]) ** 2 for k in range(3)))
    return abs(ds - dt)


def gamma_loop(src, tgt, sigma_d):
    n = len(src)
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = rigid_distance_loop(src[i], tgt[i], src[j], tgt[j])
            g[i, j] = max(0.0, 1.0 - d * d / (sigma_d * sigma_d))
    return g


def dynamic_threshold_loop(gamma, k1_frac):
    n = gamma.shape[0]
    k1 = max(1, int(np.floor(k1_frac * n + 0.5)))
    total = 0.0
    for i in range(n):
        row = sorted((gamma[i, j] for j in range(n) if j != i), reverse=True)
        total += sum(row[:k1])
    return total / (k1 * n)


def sog_weights_loop(w_gamma):
    n = w_gamma.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += w_gamma[i, k] * w_gamma[k, j]
            out[i, j] = w_gamma[i, j] * acc
    return out


def degrees_loop(h):
    n = h.shape[0]
    dv = np.array([sum(h[i, j] for j in range(n)) for i in range(n)])
    de = np.array([sum(h[i, j] for i in range(n)) for j in range(n)])
    return dv, de


def edge_weights_loop(w_h):
    n = w_h.shape[0]
    return np.array([sum(w_h[i, j] for i in range(n)) for j in range(n)])


def hyperedge_precision_loop(h, labels):
    n = h.shape[0]
    fractions = []
    for j in range(n):
        members = [i for i in range(n) if h[i, j] > 0]
        if not members:
            continue
        good = sum(1 for i in members if labels[i])
        fractions.append(good / len(members))
    return sum(fractions) / len(fractions)


def affine(x, w, b):
    return x @ w + b


def mlp_loop(z, w1, b1, w2, b2):
    hidden = np.maximum(0.0, affine(z, w1, b1))
    return affine(hidden, w2, b2)


def l2norm_rows_loop(x):
    out = np.zeros_like(x)
    for i in range(x.shape[0]):
        nrm = np.sqrt(sum(v * v for v in x[i]))
        if nrm > 0:
            out[i] = x[i] / nrm
    return out


def sigmoid_scalar(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def nonlocal_loop(x, w, params, layer, channels):
    """Attention with log-weight bias, all contractions by explicit loops."""
    n = x.shape[0]
    q = affine(x, params.value(f"nl.{layer}.theta.w"), params.value(f"nl.{layer}.theta.b"))
    k = affine(x, params.value(f"nl.{layer}.phi.w"), params.value(f"nl.{layer}.phi.b"))
    v = affine(x, params.value(f"nl.{layer}.g.w"), params.value(f"nl.{layer}.g.b"))
    out = np.zeros_like(x)
    for i in range(n):
        logits = np.zeros(n)
        for j in range(n):
            dot = sum(q[i, c] * k[j, c] for c in range(channels))
            logits[j] = dot / np.sqrt(channels) + np.log(w[i, j] + 1e-12)
        logits -= logits.max()
        weights = np.exp(logits)
        weights /= weights.sum()
        for j in range(n):
            out[i] += weights[j] * v[j]
    msg = affine(out, params.value(f"nl.{layer}.out.w"), params.value(f"nl.{layer}.out.b"))
    return x + msg


def conv_block_loop(x, y_prev, h, w_h, w_nl, params, layer, channels):
    """One convolution block (both stages) with loop-based aggregation."""
    n = x.shape[0]

    yhat = np.zeros((n, channels))
    for j in range(n):
        deg = sum(h[i, j] for i in range(n))
        if deg > 0:
            for i in range(n):
                if h[i, j] > 0:
                    yhat[j] += x[i]
            yhat[j] /= deg
    y = l2norm_rows_loop(mlp_loop(
        np.concatenate([y_prev, yhat], axis=1),
        params.value(f"mlp1.{layer}.w1"), params.value(f"mlp1.{layer}.b1"),
        params.value(f"mlp1.{layer}.w2"), params.value(f"mlp1.{layer}.b2")))

    we = edge_weights_loop(w_h)
    xhat = np.zeros((n, channels))
    for i in range(n):
        deg = sum(h[i, j] for j in range(n))
        if deg > 0:
            for j in range(n):
                if h[i, j] > 0:
                    xhat[i] += we[j] * y[j]
            xhat[i] /= deg
    xres = np.maximum(0.0, x + mlp_loop(
        xhat,
        params.value(f"mlp2.{layer}.w1"), params.value(f"mlp2.{layer}.b1"),
        params.value(f"mlp2.{layer}.w2"), params.value(f"mlp2.{layer}.b2")))
    x_next = l2norm_rows_loop(nonlocal_loop(xres, w_nl, params, layer, channels))
    return x_next, y


def update_block_loop(x_next, y, h, params, t_update, k2, channels):
    """Mask, sigmoid similarity, per-row top-K retention, by explicit loops."""
    n = x_next.shape[0]
    q = affine(x_next, params.value(f"upd.{t_update}.q.w"), params.value(f"upd.{t_update}.q.b"))
    k = affine(y, params.value(f"upd.{t_update}.k.w"), params.value(f"upd.{t_update}.k.b"))
    scores = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if h[i, j] > 0:
                dot = sum(q[i, c] * k[j, c] for c in range(channels))
                scores[i, j] = sigmoid_scalar(dot / np.sqrt(channels))
    h_new = np.zeros((n, n))
    w_new = np.zeros((n, n))
    for i in range(n):
        cand = [j for j in range(n) if h[i, j] > 0]
        cand.sort(key=lambda j: (-scores[i, j], j))
        for j in cand[:k2]:
            h_new[i, j] = 1.0
            w_new[i, j] = scores[i, j]
    return h_new, w_new
