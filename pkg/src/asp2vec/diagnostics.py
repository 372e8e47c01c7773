"""Post-training diagnostics: per-node aspect-distribution variance and the
aspect-pair cosine heatmap."""
from __future__ import annotations

import numpy as np

from .config import TrainerConfig
from .store import EmbeddingStore
from .walks import WalkCorpus


def aspect_distribution_stats(store: EmbeddingStore, corpus: WalkCorpus,
                              config: TrainerConfig) -> np.ndarray:
    """Per node: (frequency as target, variance of its mean aspect-probability vector).

    Probabilities are the noise-free softmax of the aspect scores; the
    variance is the population variance over the K entries. Nodes never seen
    as a target get frequency 0 and variance 0.
    """
    n, K = store.n, store.K
    P = store.P.astype(np.float64)
    Q = store.Q.astype(np.float64)
    freq = np.zeros(n, dtype=np.int64)
    sums = np.zeros((n, K))
    w = config.window
    for walk in corpus:
        L = len(walk)
        if L < 2:
            continue
        for t in range(L):
            ctx = np.r_[walk[max(0, t - w):t], walk[t + 1:t + w + 1]]
            i = walk[t]
            freq[i] += 1
            if K == 1:
                sums[i, 0] += 1.0
                continue
            scores = Q[:, ctx, :].mean(axis=1) @ P[i]
            z = np.exp(scores - scores.max())
            sums[i] += z / z.sum()
    seen = freq > 0
    mean = np.zeros((n, K))
    mean[seen] = sums[seen] / freq[seen, None]
    var = np.where(seen, mean.var(axis=1), 0.0)
    return np.column_stack([freq.astype(np.float64), var])


def cosine_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise cosine; 0 where either row has zero norm."""
    A = A.astype(np.float64)
    B = B.astype(np.float64)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    denom = na * nb
    out = np.zeros(len(A))
    ok = denom > 0
    out[ok] = np.clip((A[ok] * B[ok]).sum(axis=1) / denom[ok], -1.0, 1.0)
    return out


def aspect_heatmap(store: EmbeddingStore) -> np.ndarray:
    """K x K matrix of node-averaged cosine between aspect embeddings."""
    K = store.K
    H = np.eye(K)
    for a in range(K):
        for b in range(a + 1, K):
            H[a, b] = H[b, a] = cosine_rows(store.Q[a], store.Q[b]).mean()
    return H


def mean_offdiag_abs(H: np.ndarray) -> float:
    K = len(H)
    if K < 2:
        return 0.0
    return float(np.abs(H[~np.eye(K, dtype=bool)]).mean())


def stats_csv(table: np.ndarray, labels) -> str:
    lines = ["node,frequency,variance"]
    lines += [f"{lab},{int(f)},{v:.8g}" for lab, (f, v) in zip(labels, table)]
    return "\n".join(lines) + "\n"


def heatmap_csv(H: np.ndarray) -> str:
    K = len(H)
    lines = ["aspect," + ",".join(f"a{s}" for s in range(K))]
    lines += [f"a{a}," + ",".join(f"{x:.8g}" for x in H[a]) for a in range(K)]
    return "\n".join(lines) + "\n"
