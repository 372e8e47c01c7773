"""Aspect selection, the aspect-weighted skip-gram loss and the aspect regularizer.

These are float64 NumPy reference versions with analytic gradients. The
training kernels in ``_kernels`` perform the same arithmetic per window and
are tested against these functions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

zero_norm_events = 0


@dataclass(frozen=True)
class AspectDistribution:
    logits: np.ndarray
    probs: np.ndarray
    gumbel_noise: np.ndarray


@dataclass
class WindowLoss:
    loss: float
    probs: np.ndarray
    per_aspect: np.ndarray
    grad_P: np.ndarray
    grad_Q: np.ndarray


def sample_gumbel(rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return -np.log(-np.log(u))


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / z.sum()


def log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sigmoid(x):
    return np.exp(log_sigmoid(x))


def readout(Q: np.ndarray, context, aspect: int) -> np.ndarray:
    """Average pooling of the context nodes' aspect-``aspect`` embeddings."""
    context = np.asarray(context, dtype=np.int64)
    if context.size == 0:
        raise ValueError("readout of an empty context")
    return Q[aspect][context].astype(np.float64).mean(axis=0)


def aspect_logits(P: np.ndarray, Q: np.ndarray, target: int, context) -> np.ndarray:
    """Per-aspect score <P_target, readout_s(context)>."""
    p = P[target].astype(np.float64)
    return np.array([p @ readout(Q, context, s) for s in range(Q.shape[0])])


def gumbel_softmax(scores, tau: float, rng: np.random.Generator | None = None,
                   noise=None) -> AspectDistribution:
    """Relaxed categorical sample ``softmax((scores + g) / tau)``.

    Scores are used as unnormalised log class weights, so no log is taken of
    the (possibly non-positive) dot products. ``noise`` overrides sampling.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("aspect scores must be finite")
    if tau <= 0:
        raise ValueError("tau must be positive")
    K = scores.size
    if K == 1:
        return AspectDistribution(scores, np.ones(1), np.zeros(1))
    if noise is None:
        noise = sample_gumbel(rng if rng is not None else np.random.default_rng(), K)
    noise = np.asarray(noise, dtype=np.float64)
    return AspectDistribution(scores, softmax((scores + noise) / tau), noise)


def window_loss(P: np.ndarray, Q: np.ndarray, target: int, context, negatives,
                gumbel_noise=None, tau: float = 0.5, selection: str = "gumbel",
                hard: bool = False, aspect_context=None, fixed_probs=None) -> WindowLoss:
    """Negative-sampling loss of one window and its exact gradients.

    ``negatives[c]`` lists the noise nodes paired with ``context[c]``; one set
    is shared by all aspects. Aspect weights come from ``fixed_probs`` when
    given (no gradient), else from the selection module evaluated at the
    current parameters with the supplied Gumbel noise, and gradients flow
    through the readout into the aspect-context rows. ``hard`` weights the
    loss by the one-hot argmax but back-propagates through the soft weights.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    context = np.asarray(context, dtype=np.int64)
    negatives = np.asarray(negatives, dtype=np.int64).reshape(len(context), -1)
    K = Q.shape[0]
    p = P[target]
    asp_ctx = context if aspect_context is None else np.asarray(aspect_context, dtype=np.int64)

    grad_P = np.zeros_like(P)
    grad_Q = np.zeros_like(Q)

    select = fixed_probs is None and K > 1
    if fixed_probs is not None:
        z = np.asarray(fixed_probs, dtype=np.float64)
    elif K == 1:
        z = np.ones(1)
    else:
        R = np.stack([Q[s][asp_ctx].mean(axis=0) for s in range(K)])
        scores = R @ p
        if selection == "gumbel":
            noise = np.zeros(K) if gumbel_noise is None else np.asarray(gumbel_noise, float)
            z = softmax((scores + noise) / tau)
        else:
            z = softmax(scores)
    weights = np.eye(K)[np.argmax(z)] if (hard and select) else z

    ell = np.zeros(K)
    for c, j in enumerate(context):
        for s in range(K):
            x = Q[s, j] @ p
            ell[s] -= log_sigmoid(x)
            coef = weights[s] * (sigmoid(x) - 1.0)
            grad_P[target] += coef * Q[s, j]
            grad_Q[s, j] += coef * p
            for n in negatives[c]:
                x = Q[s, n] @ p
                ell[s] -= log_sigmoid(-x)
                coef = weights[s] * sigmoid(x)
                grad_P[target] += coef * Q[s, n]
                grad_Q[s, n] += coef * p

    if select:
        scale = 1.0 / tau if selection == "gumbel" else 1.0
        a = scale * z * (ell - z @ ell)
        grad_P[target] += a @ R
        for s in range(K):
            for j in asp_ctx:
                grad_Q[s, j] += a[s] * p / len(asp_ctx)

    return WindowLoss(float(weights @ ell), z, ell, grad_P, grad_Q)


def aspect_similarity(qa, qb) -> float:
    """Cosine similarity; 0 (with a counted warning) if either vector is zero."""
    global zero_norm_events
    qa = np.asarray(qa, dtype=np.float64)
    qb = np.asarray(qb, dtype=np.float64)
    na, nb = np.linalg.norm(qa), np.linalg.norm(qb)
    if na == 0.0 or nb == 0.0:
        zero_norm_events += 1
        log.warning("zero-norm aspect vector; similarity taken as 0")
        return 0.0
    return float(np.clip(qa @ qb / (na * nb), -1.0, 1.0))


def regularizer(Q: np.ndarray, epsilon: float, nodes=None) -> tuple[float, np.ndarray]:
    """Masked sum of |cos| between aspect pairs, with the mask held constant.

    Pairs with ``|cos| >= epsilon`` contribute; ``sign(0)`` is taken as 0.
    """
    Q = np.asarray(Q, dtype=np.float64)
    K, n, _ = Q.shape
    grad = np.zeros_like(Q)
    if K < 2:
        return 0.0, grad
    nodes = range(n) if nodes is None else np.unique(np.asarray(nodes, dtype=np.int64))
    total = 0.0
    for h in nodes:
        for a in range(K - 1):
            for b in range(a + 1, K):
                qa, qb = Q[a, h], Q[b, h]
                na, nb = np.linalg.norm(qa), np.linalg.norm(qb)
                if na == 0.0 or nb == 0.0:
                    continue
                f = qa @ qb / (na * nb)
                if abs(f) < epsilon:
                    continue
                total += abs(f)
                sgn = np.sign(f)
                grad[a, h] += sgn * (qb / (na * nb) - f * qa / na**2)
                grad[b, h] += sgn * (qa / (na * nb) - f * qb / nb**2)
    return total, grad
