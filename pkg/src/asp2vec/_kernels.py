"""Numba SGD kernels.

One call processes a shard of walks: every walk position with a nonempty
context is a window, windows are grouped into minibatches of ``batch_size``,
and after each minibatch the aspect regularizer takes a step on the rows the
minibatch touched. Gradients of a window are computed at the parameters
before that window's update. The per-window arithmetic mirrors
``aspects.window_loss`` and ``aspects.regularizer``.
"""
import numpy as np
from numba import njit, prange

from ._rng import next_uniform

# stats slots
LOSS, WINDOWS, REG, REG_STEPS, FALLBACK, ZERO_NORM = range(6)
N_STATS = 6

REG_OFF, REG_BATCH, REG_FULL = 0, 1, 2


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True, inline="always")
def _softplus(x):
    # log(1 + exp(x))
    if x > 0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(cache=True, inline="always")
def _draw_negative(state, noise_nodes, noise_cdf, seg_start, seg_end, t):
    lo = seg_start[t]
    hi = seg_end[t]
    x = next_uniform(state) * noise_cdf[hi - 1]
    k = lo + np.searchsorted(noise_cdf[lo:hi], x, side="right")
    if k >= hi:
        k = hi - 1
    return noise_nodes[k]


@njit(cache=True)
def asp_window_step(P, Q, i, ctx, m, ntype, multi_aspect, asp_ctx_mask,
                    noise_nodes, noise_cdf, seg_start, seg_end, frozen,
                    negatives, tau, gumbel, hard, lr, state, negs, stats):
    """One SGD step on window (i, ctx[:m]); returns the window loss."""
    K, _, d = Q.shape
    Pi = np.empty(d)
    for k in range(d):
        Pi[k] = P[i, k]
    z = np.empty(K)
    w = np.empty(K)
    ell = np.zeros(K)
    R = np.zeros((K, d))
    select = K > 1 and multi_aspect[ntype[i]]
    na = 0
    use_all = False
    if select:
        for c in range(m):
            if asp_ctx_mask[ntype[ctx[c]]]:
                na += 1
        if na == 0:
            use_all = True
            na = m
            stats[FALLBACK] += 1
        for s in range(K):
            for c in range(m):
                if use_all or asp_ctx_mask[ntype[ctx[c]]]:
                    for k in range(d):
                        R[s, k] += Q[s, ctx[c], k]
            for k in range(d):
                R[s, k] /= na
        zmax = -np.inf
        for s in range(K):
            score = 0.0
            for k in range(d):
                score += Pi[k] * R[s, k]
            if gumbel:
                score = (score - np.log(-np.log(next_uniform(state)))) / tau
            z[s] = score
            if score > zmax:
                zmax = score
        tot = 0.0
        for s in range(K):
            z[s] = np.exp(z[s] - zmax)
            tot += z[s]
        best = 0
        for s in range(K):
            z[s] /= tot
            if z[s] > z[best]:
                best = s
        for s in range(K):
            if hard:
                w[s] = 1.0 if s == best else 0.0
            else:
                w[s] = z[s]
    elif K == 1:
        z[0] = 1.0
        w[0] = 1.0
    else:
        for s in range(K):
            z[s] = 1.0 / K
            w[s] = 1.0 / K

    cpos = np.empty((m, K))
    cneg = np.empty((m, max(negatives, 1), K))
    for c in range(m):
        j = ctx[c]
        for q in range(negatives):
            negs[c, q] = _draw_negative(state, noise_nodes, noise_cdf, seg_start, seg_end, ntype[j])
        for s in range(K):
            x = 0.0
            for k in range(d):
                x += Pi[k] * Q[s, j, k]
            ell[s] += _softplus(-x)
            cpos[c, s] = _sigmoid(x) - 1.0
            for q in range(negatives):
                n = negs[c, q]
                x = 0.0
                for k in range(d):
                    x += Pi[k] * Q[s, n, k]
                ell[s] += _softplus(x)
                cneg[c, q, s] = _sigmoid(x)

    loss = 0.0
    for s in range(K):
        loss += w[s] * ell[s]

    gP = np.zeros(d)
    for c in range(m):
        j = ctx[c]
        for s in range(K):
            if w[s] == 0.0:
                continue
            coef = w[s] * cpos[c, s]
            for k in range(d):
                gP[k] += coef * Q[s, j, k]
            for q in range(negatives):
                n = negs[c, q]
                coef = w[s] * cneg[c, q, s]
                for k in range(d):
                    gP[k] += coef * Q[s, n, k]

    if select:
        scale = 1.0 / tau if gumbel else 1.0
        zl = 0.0
        for s in range(K):
            zl += z[s] * ell[s]
        for s in range(K):
            a = scale * z[s] * (ell[s] - zl)
            for k in range(d):
                gP[k] += a * R[s, k]
            step = lr * a / na
            for c in range(m):
                j = ctx[c]
                if (use_all or asp_ctx_mask[ntype[j]]) and not frozen[j]:
                    for k in range(d):
                        Q[s, j, k] -= step * Pi[k]

    for c in range(m):
        j = ctx[c]
        for s in range(K):
            if w[s] == 0.0:
                continue
            if not frozen[j]:
                for k in range(d):
                    Q[s, j, k] -= lr * w[s] * cpos[c, s] * Pi[k]
            for q in range(negatives):
                n = negs[c, q]
                if not frozen[n]:
                    for k in range(d):
                        Q[s, n, k] -= lr * w[s] * cneg[c, q, s] * Pi[k]

    if not frozen[i]:
        for k in range(d):
            P[i, k] -= lr * gP[k]
    return loss


@njit(cache=True)
def dw_window_step(P, Q, i, ctx, m, ntype, noise_nodes, noise_cdf, seg_start, seg_end,
                   frozen, negatives, lr, state, negs):
    """Plain skip-gram step with a single context matrix ``Q[0]``."""
    d = P.shape[1]
    Pi = np.empty(d)
    for k in range(d):
        Pi[k] = P[i, k]
    cpos = np.empty(m)
    cneg = np.empty((m, max(negatives, 1)))
    loss = 0.0
    for c in range(m):
        j = ctx[c]
        for q in range(negatives):
            negs[c, q] = _draw_negative(state, noise_nodes, noise_cdf, seg_start, seg_end, ntype[j])
        x = 0.0
        for k in range(d):
            x += Pi[k] * Q[0, j, k]
        loss += _softplus(-x)
        cpos[c] = _sigmoid(x) - 1.0
        for q in range(negatives):
            n = negs[c, q]
            x = 0.0
            for k in range(d):
                x += Pi[k] * Q[0, n, k]
            loss += _softplus(x)
            cneg[c, q] = _sigmoid(x)
    gP = np.zeros(d)
    for c in range(m):
        j = ctx[c]
        coef = cpos[c]
        for k in range(d):
            gP[k] += coef * Q[0, j, k]
        for q in range(negatives):
            n = negs[c, q]
            coef = cneg[c, q]
            for k in range(d):
                gP[k] += coef * Q[0, n, k]
    for c in range(m):
        j = ctx[c]
        if not frozen[j]:
            for k in range(d):
                Q[0, j, k] -= lr * cpos[c] * Pi[k]
        for q in range(negatives):
            n = negs[c, q]
            if not frozen[n]:
                for k in range(d):
                    Q[0, n, k] -= lr * cneg[c, q] * Pi[k]
    if not frozen[i]:
        for k in range(d):
            P[i, k] -= lr * gP[k]
    return loss


@njit(cache=True)
def reg_step(Q, rows, n_rows, frozen, eps, step, stats):
    """Gradient step of ``step`` on the masked |cos| penalty of ``rows``."""
    K, _, d = Q.shape
    G = np.zeros((K, d))
    total = 0.0
    for r in range(n_rows):
        h = rows[r]
        if frozen[h]:
            continue
        G[:, :] = 0.0
        hit = False
        for a in range(K - 1):
            for b in range(a + 1, K):
                na = 0.0
                nb = 0.0
                dot = 0.0
                for k in range(d):
                    na += Q[a, h, k] * Q[a, h, k]
                    nb += Q[b, h, k] * Q[b, h, k]
                    dot += Q[a, h, k] * Q[b, h, k]
                if na == 0.0 or nb == 0.0:
                    stats[ZERO_NORM] += 1
                    continue
                na = np.sqrt(na)
                nb = np.sqrt(nb)
                f = dot / (na * nb)
                if abs(f) < eps:
                    continue
                total += abs(f)
                if f == 0.0:
                    continue
                sg = 1.0 if f > 0 else -1.0
                hit = True
                for k in range(d):
                    G[a, k] += sg * (Q[b, h, k] / (na * nb) - f * Q[a, h, k] / (na * na))
                    G[b, k] += sg * (Q[a, h, k] / (na * nb) - f * Q[b, h, k] / (nb * nb))
        if hit:
            for s in range(K):
                for k in range(d):
                    Q[s, h, k] -= step * G[s, k]
    stats[REG] += total
    stats[REG_STEPS] += 1
    return total


@njit(cache=True, inline="always")
def _touch(node, batch_id, stamp, touched, n_touched):
    if stamp[node] != batch_id:
        stamp[node] = batch_id
        touched[n_touched] = node
        n_touched += 1
    return n_touched


@njit(cache=True)
def train_shard(P, Q, nodes, offsets, walk_order, ntype, multi_aspect, asp_ctx_mask,
                noise_nodes, noise_cdf, seg_start, seg_end, frozen,
                window, negatives, tau, gumbel, hard, dw_mode,
                reg_mode, lam, eps, batch_size,
                lr0, min_lr, total_windows, windows_before, lr_stride,
                state, stamp, touched, stats):
    """Run every window of ``walk_order`` in sequence; returns windows done."""
    n = P.shape[0]
    ctx = np.empty(2 * window, dtype=np.int64)
    negs = np.empty((2 * window, max(negatives, 1)), dtype=np.int64)
    all_rows = np.arange(n)
    done = 0
    in_batch = 0
    batch_id = stamp.max() + 1
    n_touched = 0
    lr = lr0
    for wi in walk_order:
        lo = offsets[wi]
        L = offsets[wi + 1] - lo
        if L < 2:
            continue
        for t in range(L):
            i = nodes[lo + t]
            m = 0
            for u in range(max(0, t - window), min(L, t + window + 1)):
                if u != t:
                    ctx[m] = nodes[lo + u]
                    m += 1
            lr = lr0 * (1.0 - (windows_before + done * lr_stride) / total_windows)
            if lr < min_lr:
                lr = min_lr
            if dw_mode:
                loss = dw_window_step(P, Q, i, ctx, m, ntype, noise_nodes, noise_cdf,
                                      seg_start, seg_end, frozen, negatives, lr, state, negs)
            else:
                loss = asp_window_step(P, Q, i, ctx, m, ntype, multi_aspect, asp_ctx_mask,
                                       noise_nodes, noise_cdf, seg_start, seg_end, frozen,
                                       negatives, tau, gumbel, hard, lr, state, negs, stats)
            stats[LOSS] += loss
            stats[WINDOWS] += 1
            done += 1
            if reg_mode == 1:
                n_touched = _touch(i, batch_id, stamp, touched, n_touched)
                for c in range(m):
                    n_touched = _touch(ctx[c], batch_id, stamp, touched, n_touched)
                    for q in range(negatives):
                        n_touched = _touch(negs[c, q], batch_id, stamp, touched, n_touched)
            in_batch += 1
            if in_batch == batch_size:
                if reg_mode == 1:
                    reg_step(Q, touched, n_touched, frozen, eps, lr * lam, stats)
                elif reg_mode == 2:
                    reg_step(Q, all_rows, n, frozen, eps, lr * lam, stats)
                in_batch = 0
                n_touched = 0
                batch_id += 1
    if in_batch > 0:
        if reg_mode == 1:
            reg_step(Q, touched, n_touched, frozen, eps, lr * lam, stats)
        elif reg_mode == 2:
            reg_step(Q, all_rows, n, frozen, eps, lr * lam, stats)
        batch_id += 1
    return done


@njit(cache=True, parallel=True)
def train_shards_parallel(P, Q, nodes, offsets, walk_order, shard_bounds, ntype, multi_aspect,
                          asp_ctx_mask, noise_nodes, noise_cdf, seg_start, seg_end, frozen,
                          window, negatives, tau, gumbel, hard, dw_mode,
                          reg_mode, lam, eps, batch_size,
                          lr0, min_lr, total_windows, windows_before,
                          states, stamps, touched, stats):
    """Hogwild: shards update the shared matrices without synchronisation."""
    n_shards = len(shard_bounds) - 1
    for sh in prange(n_shards):
        train_shard(P, Q, nodes, offsets, walk_order[shard_bounds[sh]:shard_bounds[sh + 1]],
                    ntype, multi_aspect, asp_ctx_mask, noise_nodes, noise_cdf, seg_start,
                    seg_end, frozen, window, negatives, tau, gumbel, hard, dw_mode,
                    reg_mode, lam, eps, batch_size, lr0, min_lr, total_windows,
                    windows_before, n_shards, states[sh], stamps[sh], touched[sh], stats[sh])
