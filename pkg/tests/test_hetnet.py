import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asp2vec.aspects import window_loss
from asp2vec.config import TrainerConfig
from asp2vec.evaluation import evaluate, split_edges
from asp2vec.graph import GraphFormatError, from_edges
from asp2vec.hetnet import het_typing, load_features, ranking_metrics, train_het
from asp2vec.synthetic import author_paper_graph
from asp2vec.trainer import train
from asp2vec.walks import metapath_walks

from oracles import brute_force_ranking, central_diff, rel_error


def toy_graph():
    # authors 0-2, papers 3-6
    edges = np.array([[0, 3], [0, 4], [1, 4], [1, 5], [2, 5], [2, 6], [0, 6]])
    g = from_edges(edges, 7, directed=False)
    return g.with_types(np.array([0, 0, 0, 1, 1, 1, 1], np.int32), ["A", "P"])


CFG = TrainerConfig(d=4, K=2, walks_per_node=3, walk_length=10, epochs=1, seed=0)


# ranking

def test_ranking_single_positive_on_top():
    q = [(0, 0.9, True)] + [(k, 0.5 - k / 100, False) for k in range(1, 10)]
    m = ranking_metrics([q], N_list=(1, 5))
    assert m["recall@5"] == 1.0 and m["recall@1"] == 1.0
    assert m["f1@5"] == pytest.approx(1 / 3)
    assert m["auc"] == 1.0


def test_ranking_positive_last():
    q = [(0, -1.0, True)] + [(k, float(k), False) for k in range(1, 10)]
    m = ranking_metrics([q], N_list=(5,))
    assert m["recall@5"] == 0.0 and m["f1@5"] == 0.0 and m["auc"] == 0.0


def test_ranking_skips_degenerate_queries(caplog):
    good = [(0, 1.0, True), (1, 0.0, False)]
    with caplog.at_level(logging.WARNING):
        m = ranking_metrics([good, [(0, 1.0, False)], [(0, 1.0, True)]])
    assert m["queries"] == 1 and m["skipped"] == 2
    assert "skipped 2" in caplog.text
    with pytest.raises(ValueError):
        ranking_metrics([[(0, 1.0, True)]])


def test_ranking_oracle():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(2, 25))
        scores = rng.integers(0, 5, n).astype(float)  # plenty of ties
        pos = rng.random(n) < 0.3
        if not 0 < pos.sum() < n:
            continue
        q = list(zip(range(n), scores, pos))
        got = ranking_metrics([q], N_list=(1, 3, 10))
        for N in (1, 3, 10):
            recall, f1, auc = brute_force_ranking(q, N)
            assert got[f"recall@{N}"] == pytest.approx(recall, abs=1e-12)
            assert got[f"f1@{N}"] == pytest.approx(f1, abs=1e-12)
            assert got["auc"] == pytest.approx(auc, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_recall_non_decreasing(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    pos = rng.random(n) < 0.5
    pos[0], pos[-1] = True, False
    q = list(zip(range(n), rng.normal(size=n), pos))
    Ns = tuple(range(1, n + 2))
    m = ranking_metrics([q], N_list=Ns)
    rec = [m[f"recall@{N}"] for N in Ns]
    assert all(b >= a for a, b in zip(rec, rec[1:]))
    assert rec[-1] == 1.0


# typing

def test_het_typing_flags():
    t = het_typing(toy_graph(), {"P"}, {"P"})
    assert t.multi_aspect.tolist() == [True, False]
    assert t.aspect_context.tolist() == [False, True]
    assert t.typed_negatives


@pytest.mark.parametrize("ctx,single", [((), ()), (("Z",), ()), (("P",), ("Q",))])
def test_het_typing_errors(ctx, single):
    with pytest.raises(ValueError):
        het_typing(toy_graph(), ctx, single)


def test_het_typing_needs_types():
    g = from_edges(np.array([[0, 1]]), 2, directed=False)
    with pytest.raises(ValueError, match="typed"):
        het_typing(g, {"A"})


# gradients on a typed window

def test_two_type_gradients_with_aspect_context():
    rng = np.random.default_rng(1)
    g = toy_graph()
    types = g.node_types
    for _ in range(30):
        P = rng.normal(0, 0.6, (7, 4))
        Q = rng.normal(0, 0.6, (2, 7, 4))
        target = int(rng.integers(0, 3))
        ctx = rng.integers(0, 7, size=int(rng.integers(2, 7)))
        asp = ctx[types[ctx] == 1]
        if len(asp) == 0:
            continue
        negs = rng.integers(0, 7, size=(len(ctx), 2))
        noise = rng.gumbel(size=2)
        kw = dict(gumbel_noise=noise, aspect_context=asp)
        res = window_loss(P, Q, target, ctx, negs, **kw)
        fP = central_diff(lambda X: window_loss(X, Q, target, ctx, negs, **kw).loss, P)
        fQ = central_diff(lambda X: window_loss(P, X, target, ctx, negs, **kw).loss, Q)
        assert rel_error(res.grad_P, fP) < 1e-4 and rel_error(res.grad_Q, fQ) < 1e-4


# training

def test_single_type_matches_homogeneous_training():
    edges = np.array([[0, 1], [1, 2], [2, 3], [3, 0], [0, 2], [3, 4], [4, 5], [5, 3]])
    g = from_edges(edges, 6, directed=False).with_types(np.zeros(6, np.int32), ["X"])
    corpus = metapath_walks(g, ["X,X"], 4, 12, 0)
    a = train_het(g, CFG, ["X,X"], {"X"}, corpus=corpus)
    b = train(g, CFG, corpus)
    assert np.array_equal(a.P, b.P) and np.array_equal(a.Q, b.Q)


def test_fallback_counted_and_logged(caplog):
    # "A,A" walks never contain a paper, so every window falls back
    edges = np.array([[0, 1], [1, 2], [0, 3]])
    g = from_edges(edges, 4, directed=False).with_types(np.array([0, 0, 0, 1], np.int32), ["A", "P"])
    with caplog.at_level(logging.WARNING):
        s = train_het(g, CFG.replace(warmup=False), ["A,A"], {"P"})
    assert s.meta["training_log"]
    assert "no aspect-context node" in caplog.text


def test_features_are_frozen():
    g = toy_graph()
    feats = {3: np.arange(4.0), 5: -np.ones(4)}
    s = train_het(g, CFG, ["A,P,A", "P,A,P"], {"P"}, features=feats)
    for node, vec in feats.items():
        assert np.allclose(s.P[node], vec)
        assert np.allclose(s.Q[:, node], vec[None])
    assert s.meta["mode"] == "asp2vec-het"
    with pytest.raises(ValueError):
        train_het(g, CFG, ["A,P,A"], {"P"}, features={3: np.ones(3)})


def test_load_features(tmp_path):
    g = toy_graph()
    p = tmp_path / "f.txt"
    p.write_text("# features\n3 1 2 3 4\n")
    f = load_features(g, p, 4)
    assert list(f) == [3] and f[3].tolist() == [1, 2, 3, 4]
    p.write_text("3 1 2\n")
    with pytest.raises(GraphFormatError):
        load_features(g, p, 4)


def test_author_paper_link_prediction():
    g, _ = author_paper_graph(seed=0)
    sp = split_edges(g, seed=0, typed_negatives=True)
    cfg = TrainerConfig(d=16, K=3, walks_per_node=5, walk_length=40, epochs=1, seed=0)
    s = train_het(sp.residual_graph, cfg, ["A,P,A", "P,A,P"], {"P"})
    assert evaluate(s, sp).auc > 0.75
