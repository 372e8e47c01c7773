"""Heterogeneous networks: meta-path corpora, type-aware training and
ranking metrics for candidate retrieval."""
from __future__ import annotations

import logging

import numpy as np

from .config import TrainerConfig
from .evaluation import auc_roc
from .graph import Graph, GraphFormatError, _iter_lines
from .store import DTYPE, EmbeddingStore
from .trainer import NodeTyping, train, warmup_init
from .walks import WalkCorpus, metapath_walks

log = logging.getLogger(__name__)


def het_typing(graph: Graph, aspect_context_types, single_aspect_types=(),
               frozen: np.ndarray | None = None) -> NodeTyping:
    """Node typing for case-1 (multi-aspect) and case-2 (single-aspect) targets.

    Types not listed in ``single_aspect_types`` are multi-aspect. Negatives
    are drawn from the context node's own type.
    """
    if graph.node_types is None:
        raise ValueError("heterogeneous training needs a typed graph")
    names = list(graph.type_names)
    aspect_context_types = set(aspect_context_types)
    single_aspect_types = set(single_aspect_types)
    if not aspect_context_types:
        raise ValueError("aspect_context_types must be nonempty")
    unknown = (aspect_context_types | single_aspect_types) - set(names)
    if unknown:
        raise ValueError(f"unknown node type(s) {sorted(unknown)}")
    multi = np.array([t not in single_aspect_types for t in names], dtype=np.bool_)
    ctx = np.array([t in aspect_context_types for t in names], dtype=np.bool_)
    return NodeTyping(graph.node_types.astype(np.int32), multi, ctx, typed_negatives=True, frozen=frozen)


def load_features(graph: Graph, source, d: int) -> dict[int, np.ndarray]:
    """Read "node_id v1 ... vd" lines into {node index: vector}."""
    out = {}
    for lineno, line in enumerate(_iter_lines(source), 1):
        line = line.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) != d + 1:
            raise GraphFormatError(f"line {lineno}: expected node id and {d} values, got {len(parts)} fields")
        try:
            vec = np.array([float(x) for x in parts[1:]])
            node = graph.index_of(parts[0])
        except (ValueError, KeyError) as exc:
            raise GraphFormatError(f"line {lineno}: {exc}") from None
        out[node] = vec
    return out


def train_het(graph: Graph, config: TrainerConfig, schemes, aspect_context_types,
              single_aspect_types=(), features: dict[int, np.ndarray] | None = None,
              corpus: WalkCorpus | None = None) -> EmbeddingStore:
    """Train on meta-path walks with type-restricted aspect selection.

    ``features`` pins the target and every aspect-context row of the given
    nodes to fixed vectors that are never updated.
    """
    if corpus is None:
        corpus = metapath_walks(graph, schemes, config.walks_per_node, config.walk_length, config.seed)
    frozen = None
    if features:
        frozen = np.zeros(graph.node_count, dtype=np.bool_)
        frozen[list(features)] = True
    typing = het_typing(graph, aspect_context_types, single_aspect_types, frozen)
    store = None
    if features:
        store = warmup_init(graph, config, corpus, typing)
        for node, vec in features.items():
            if len(vec) != config.d:
                raise ValueError(f"feature vector of node {graph.label(node)} has length {len(vec)}")
            store.P[node] = vec.astype(DTYPE)
            store.Q[:, node] = vec.astype(DTYPE)
    store = train(graph, config, corpus, store, typing)
    store.meta.update(mode="asp2vec-het", schemes=[s if isinstance(s, str) else ",".join(s) for s in
                                                  ([schemes] if isinstance(schemes, str) else schemes)],
                      aspect_context_types=sorted(aspect_context_types),
                      single_aspect_types=sorted(single_aspect_types))
    return store


def ranking_metrics(queries, N_list=(1, 5, 10)) -> dict:
    """Recall@N, F1@N and AUC averaged over queries.

    Each query is a list of (candidate, score, is_positive). Candidates are
    ranked by descending score, ties kept in input order. Queries without a
    positive or without a negative are skipped with a warning.
    """
    recall = {N: [] for N in N_list}
    f1 = {N: [] for N in N_list}
    aucs = []
    skipped = 0
    for q in queries:
        scores = np.array([float(s) for _, s, _ in q])
        pos = np.array([bool(p) for _, _, p in q])
        n_pos = int(pos.sum())
        if n_pos == 0 or n_pos == len(pos):
            skipped += 1
            continue
        ranked = pos[np.argsort(-scores, kind="stable")]
        for N in N_list:
            hits = int(ranked[:N].sum())
            r = hits / n_pos
            p = hits / N
            recall[N].append(r)
            f1[N].append(0.0 if hits == 0 else 2 * p * r / (p + r))
        aucs.append(auc_roc(scores, pos))
    if skipped:
        log.warning("skipped %d quer%s without both positives and negatives",
                    skipped, "y" if skipped == 1 else "ies")
    if not aucs:
        raise ValueError("no usable queries")
    out = {"queries": len(aucs), "skipped": skipped, "auc": float(np.mean(aucs))}
    for N in N_list:
        out[f"recall@{N}"] = float(np.mean(recall[N]))
        out[f"f1@{N}"] = float(np.mean(f1[N]))
    return out
