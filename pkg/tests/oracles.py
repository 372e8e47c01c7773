"""Independent reference implementations used only by the tests."""
import numpy as np
from scipy import stats


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f(x)
        x[idx] = old - h
        fm = f(x)
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b):
    a = np.ravel(a)
    b = np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale < 1e-12:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


def auc_all_pairs(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    pos = scores[labels]
    neg = scores[~labels]
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (len(pos) * len(neg))


def newton_logreg(X, y, l2, iters=100):
    """Damped Newton on mean log-loss + l2/2 ||w||^2 (bias unpenalised)."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    n, d = X.shape
    A = np.hstack([X, np.ones((n, 1))])
    reg = np.full(d + 1, l2)
    reg[-1] = 0.0

    def f(t):
        z = A @ t
        return np.mean(np.logaddexp(0, z) - y * z) + 0.5 * np.sum(reg * t * t)

    t = np.zeros(d + 1)
    for _ in range(iters):
        z = A @ t
        p = 1 / (1 + np.exp(-z))
        g = A.T @ (p - y) / n + reg * t
        H = (A.T * (p * (1 - p))) @ A / n + np.diag(reg) + 1e-12 * np.eye(d + 1)
        step = np.linalg.solve(H, g)
        a = 1.0
        f0 = f(t)
        while f(t - a * step) > f0 - 0.25 * a * (g @ step) and a > 1e-10:
            a *= 0.5
        t = t - a * step
        if np.linalg.norm(g) < 1e-13:
            break
    return t, f(t)


def transition_chi2(graph, corpus):
    """Pooled chi-square of observed next-node counts vs uniform over neighbors.

    Returns (statistic, dof, p-value) over all nodes with at least two
    neighbors.
    """
    counts = {}
    for walk in corpus:
        for a, b in zip(walk[:-1], walk[1:]):
            counts.setdefault(int(a), {}).setdefault(int(b), 0)
            counts[int(a)][int(b)] += 1
    stat = 0.0
    dof = 0
    for v, nxt in counts.items():
        nbrs = sorted(set(graph.neighbors(v)))
        mult = {u: graph.neighbors(v).count(u) for u in nbrs}
        deg = len(graph.neighbors(v))
        if len(nbrs) < 2:
            continue
        total = sum(nxt.values())
        for u in nbrs:
            exp = total * mult[u] / deg
            stat += (nxt.get(u, 0) - exp) ** 2 / exp
        dof += len(nbrs) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def brute_force_ranking(query, N):
    """Recall@N, F1@N and AUC of one query by direct enumeration."""
    ranked = sorted(range(len(query)), key=lambda k: (-query[k][1], k))
    pos_total = sum(1 for q in query if q[2])
    hits = sum(1 for k in ranked[:N] if query[k][2])
    recall = hits / pos_total
    precision = hits / N
    f1 = 0.0 if hits == 0 else 2 * precision * recall / (precision + recall)
    auc = auc_all_pairs([q[1] for q in query], [q[2] for q in query])
    return recall, f1, auc


def reg_fixed_mask(Q, mask):
    """Sum of mask * |cos| with the mask given (K, K, n boolean)."""
    K, n, _ = Q.shape
    total = 0.0
    for a in range(K):
        for b in range(a + 1, K):
            for h in range(n):
                if mask[a, b, h]:
                    qa, qb = Q[a, h], Q[b, h]
                    total += abs(qa @ qb) / (np.linalg.norm(qa) * np.linalg.norm(qb))
    return total


def reg_mask(Q, eps):
    K, n, _ = Q.shape
    mask = np.zeros((K, K, n), dtype=bool)
    for a in range(K):
        for b in range(a + 1, K):
            for h in range(n):
                qa, qb = Q[a, h], Q[b, h]
                c = qa @ qb / (np.linalg.norm(qa) * np.linalg.norm(qb))
                mask[a, b, h] = abs(c) >= eps
    return mask


def sgns_window_loss(P, Q, target, context, negatives, weights):
    """Direct loss formula: -sum_j sum_s w_s [log s(P.Qj) + sum_n log s(-P.Qn)]."""
    p = P[target]
    total = 0.0
    for c, j in enumerate(context):
        for s in range(Q.shape[0]):
            term = -np.logaddexp(0, -(p @ Q[s, j]))
            for n in negatives[c]:
                term += -np.logaddexp(0, p @ Q[s, n])
            total -= weights[s] * term
    return total
