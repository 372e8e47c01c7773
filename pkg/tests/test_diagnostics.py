import numpy as np
import pytest

from asp2vec.config import TrainerConfig
from asp2vec.diagnostics import (aspect_distribution_stats, aspect_heatmap, heatmap_csv,
                                 mean_offdiag_abs, stats_csv)
from asp2vec.store import EmbeddingStore, init_random
from asp2vec.walks import from_walks

CFG = TrainerConfig(window=2)


def corpus():
    return from_walks([[0, 1, 2, 3], [3, 2, 1, 0], [1, 3]], 1, 4, 0)


def test_single_aspect_has_zero_variance():
    s = init_random(4, 3, 1, seed=0)
    stats = aspect_distribution_stats(s, corpus(), CFG)
    assert np.array_equal(stats[:, 0], [2, 3, 2, 3])
    assert not stats[:, 1].any()


def test_one_hot_probabilities():
    P = np.full((4, 1), 100.0)
    Q = np.zeros((4, 4, 1))
    Q[0] = 1.0
    stats = aspect_distribution_stats(EmbeddingStore(P, Q), corpus(), CFG)
    assert np.allclose(stats[:, 1], 0.1875)


def test_uniform_probabilities():
    rng = np.random.default_rng(1)
    Q = np.tile(rng.normal(size=(1, 4, 2)), (3, 1, 1))
    stats = aspect_distribution_stats(EmbeddingStore(rng.normal(size=(4, 2)), Q), corpus(), CFG)
    assert np.allclose(stats[:, 1], 0, atol=1e-15)


def test_unseen_node_zero():
    s = init_random(6, 2, 3, seed=2)
    stats = aspect_distribution_stats(s, corpus(), CFG)
    assert stats[4].tolist() == [0.0, 0.0] and stats[5].tolist() == [0.0, 0.0]


def test_variance_oracle():
    rng = np.random.default_rng(3)
    P = rng.normal(size=(4, 2))
    Q = rng.normal(size=(3, 4, 2))
    stats = aspect_distribution_stats(EmbeddingStore(P, Q), corpus(), CFG)
    # node 1 as a target: windows from the three walks
    windows = [[0, 2, 3], [3, 2, 0], [3]]
    probs = []
    for ctx in windows:
        c = [sum(P[1] @ Q[s, j] for j in ctx) / len(ctx) for s in range(3)]
        e = np.exp(np.array(c) - max(c))
        probs.append(e / e.sum())
    mean = np.mean(probs, axis=0)
    assert stats[1, 0] == 3
    assert stats[1, 1] == pytest.approx(np.mean((mean - mean.mean()) ** 2), rel=1e-10)


def test_heatmap_identical_aspects():
    Q = np.tile(np.random.default_rng(4).normal(size=(1, 5, 3)), (3, 1, 1))
    H = aspect_heatmap(EmbeddingStore(np.zeros((5, 3)), Q))
    assert np.allclose(H, 1.0)
    assert mean_offdiag_abs(H) == pytest.approx(1.0)


def test_heatmap_orthogonal_aspects():
    Q = np.zeros((3, 4, 3))
    for s in range(3):
        Q[s, :, s] = 1.0
    H = aspect_heatmap(EmbeddingStore(np.zeros((4, 3)), Q))
    assert np.array_equal(H, np.eye(3))
    assert mean_offdiag_abs(H) == 0.0
    assert mean_offdiag_abs(np.eye(1)) == 0.0


def test_heatmap_oracle():
    rng = np.random.default_rng(5)
    Q = rng.normal(size=(3, 6, 4))
    H = aspect_heatmap(EmbeddingStore(np.zeros((6, 4)), Q))
    for a in range(3):
        for b in range(3):
            cos = [Q[a, i] @ Q[b, i] / np.linalg.norm(Q[a, i]) / np.linalg.norm(Q[b, i]) for i in range(6)]
            assert H[a, b] == pytest.approx(np.mean(cos), abs=1e-12)
    assert np.array_equal(H, H.T)


def test_csv_formats():
    table = np.array([[2.0, 0.25], [0.0, 0.0]])
    text = stats_csv(table, ["a", "b"])
    assert text.splitlines() == ["node,frequency,variance", "a,2,0.25", "b,0,0"]
    lines = heatmap_csv(np.eye(2)).splitlines()
    assert lines[0] == "aspect,a0,a1" and lines[1] == "a0,1,0"
