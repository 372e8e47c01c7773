"""Training loops: skip-gram warm-up and multi-aspect training."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from ._rng import stream_key
from .config import TrainerConfig
from .graph import Graph
from .store import DTYPE, EmbeddingStore, finalize_embeddings, init_random
from .walks import WalkCorpus, generate_walks

log = logging.getLogger(__name__)

CHUNKS_PER_EPOCH = 10


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class NodeTyping:
    """How node types enter training; the default is a single type."""

    ntype: np.ndarray
    multi_aspect: np.ndarray
    aspect_context: np.ndarray
    typed_negatives: bool = False
    frozen: np.ndarray | None = None

    @classmethod
    def homogeneous(cls, n: int) -> "NodeTyping":
        return cls(np.zeros(n, dtype=np.int32), np.ones(1, dtype=np.bool_), np.ones(1, dtype=np.bool_))


@dataclass
class NoiseTable:
    nodes: np.ndarray
    cdf: np.ndarray
    seg_start: np.ndarray
    seg_end: np.ndarray


def noise_table(corpus: WalkCorpus, ntype: np.ndarray, typed: bool, power: float = 0.75) -> NoiseTable:
    """Unigram^0.75 over walk-corpus frequencies, one segment per node type."""
    n = len(ntype)
    counts = corpus.node_frequencies(n).astype(np.float64)
    groups = ntype if typed else np.zeros(n, dtype=np.int32)
    n_types = int(groups.max()) + 1 if n else 1
    present = np.flatnonzero(counts > 0)
    order = present[np.argsort(groups[present], kind="stable")]
    weights = counts[order] ** power
    seg_start = np.zeros(n_types, dtype=np.int64)
    seg_end = np.zeros(n_types, dtype=np.int64)
    cdf = np.empty(len(order))
    g = groups[order]
    for t in range(n_types):
        idx = np.flatnonzero(g == t)
        if len(idx):
            seg_start[t], seg_end[t] = idx[0], idx[-1] + 1
            cdf[idx[0]:idx[-1] + 1] = np.cumsum(weights[idx])
    if not typed:
        # one segment, addressable under every type id the kernel may look up
        k = int(ntype.max()) + 1 if n else 1
        seg_start, seg_end = np.repeat(seg_start, k), np.repeat(seg_end, k)
    return NoiseTable(order.astype(np.int64), cdf, seg_start, seg_end)


@dataclass
class TrainingLog:
    records: list = field(default_factory=list)

    def add(self, epoch, step, mean_loss, mean_reg):
        self.records.append({"epoch": epoch, "step": step, "mean_loss": mean_loss, "mean_reg": mean_reg})
        log.info("epoch %d step %d mean_loss %.6f mean_reg %.6f", epoch, step, mean_loss, mean_reg)

    def to_csv(self) -> str:
        lines = ["epoch,step,mean_loss,mean_reg"]
        lines += [f"{r['epoch']},{r['step']},{r['mean_loss']:.8g},{r['mean_reg']:.8g}" for r in self.records]
        return "\n".join(lines) + "\n"


def _run(store: EmbeddingStore, corpus: WalkCorpus, config: TrainerConfig, typing: NodeTyping,
         dw_mode: bool, epochs: int, salt: int) -> TrainingLog:
    n = store.n
    noise = noise_table(corpus, typing.ntype, typing.typed_negatives)
    frozen = typing.frozen if typing.frozen is not None else np.zeros(n, dtype=np.bool_)
    reg_on = (not dw_mode and config.reg_enabled and config.lam > 0 and store.K > 1)
    reg_mode = {"batch": kern.REG_BATCH, "full": kern.REG_FULL}[config.reg_scope] if reg_on else kern.REG_OFF
    lengths = corpus.lengths()
    per_epoch = int(lengths[lengths >= 2].sum())
    total = max(per_epoch * max(epochs, 1), 1)
    threads = config.effective_threads
    if threads > 1:
        import numba
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    stamps = np.full((threads, n), -1, dtype=np.int64)
    touched = np.empty((threads, n), dtype=np.int64)
    states = np.zeros((threads, 1), dtype=np.uint64)
    tlog = TrainingLog()
    windows_before = 0
    args = (typing.ntype, typing.multi_aspect, typing.aspect_context,
            noise.nodes, noise.cdf, noise.seg_start, noise.seg_end, frozen,
            config.window, config.negatives, config.tau, config.selection == "gumbel",
            config.hard_sample, dw_mode, reg_mode, config.lam, config.epsilon, config.batch_size,
            config.lr, config.min_lr, float(total))
    for epoch in range(epochs):
        order = np.random.default_rng([config.seed, salt, epoch]).permutation(len(corpus))
        for sh in range(threads):
            states[sh, 0] = stream_key(config.seed, salt * 1_000_003 + epoch, sh)
        for step, chunk in enumerate(np.array_split(order, CHUNKS_PER_EPOCH)):
            stats = np.zeros((threads, kern.N_STATS))
            if threads == 1:
                done = kern.train_shard(store.P, store.Q, corpus.nodes, corpus.offsets, chunk, *args,
                                        float(windows_before), 1.0, states[0], stamps[0],
                                        touched[0], stats[0])
            else:
                bounds = np.linspace(0, len(chunk), threads + 1).astype(np.int64)
                kern.train_shards_parallel(store.P, store.Q, corpus.nodes, corpus.offsets, chunk,
                                           bounds, *args, float(windows_before), states, stamps,
                                           touched, stats)
                done = int(stats[:, kern.WINDOWS].sum())
            windows_before += done
            s = stats.sum(axis=0)
            if not (np.isfinite(s[kern.LOSS]) and store.is_finite()):
                bad = int((~np.isfinite(store.P)).sum() + (~np.isfinite(store.Q)).sum())
                raise TrainingDivergedError(
                    f"non-finite parameters after epoch {epoch} step {step} "
                    f"({bad} bad entries, lr={config.lr}); lower the learning rate")
            if s[kern.FALLBACK]:
                log.warning("%d window(s) had no aspect-context node; used full context",
                            int(s[kern.FALLBACK]))
            tlog.add(epoch, step, s[kern.LOSS] / max(s[kern.WINDOWS], 1),
                     s[kern.REG] / max(s[kern.REG_STEPS], 1))
    return tlog


def _corpus_for(graph: Graph, config: TrainerConfig, corpus: WalkCorpus | None) -> WalkCorpus:
    if corpus is None:
        corpus = generate_walks(graph, config.walks_per_node, config.walk_length, config.seed)
    return corpus


def train_deepwalk(graph: Graph, config: TrainerConfig, corpus: WalkCorpus | None = None,
                   store: EmbeddingStore | None = None, typing: NodeTyping | None = None,
                   epochs: int | None = None) -> EmbeddingStore:
    """Single-vector skip-gram with negative sampling (target P, context Q[0])."""
    corpus = _corpus_for(graph, config, corpus)
    if store is None:
        store = init_random(graph.node_count, config.d, 1, config.seed, config.init_scale)
    if store.K != 1:
        raise ValueError("skip-gram mode needs a single context matrix")
    typing = typing or NodeTyping.homogeneous(graph.node_count)
    tlog = _run(store, corpus, config, typing, True, config.epochs if epochs is None else epochs, 0)
    store.labels = list(graph.labels)
    store.meta.update(config=config.to_dict(), mode="deepwalk", training_log=tlog.records)
    finalize_embeddings(store)
    return store


def warmup_init(graph: Graph, config: TrainerConfig, corpus: WalkCorpus | None = None,
                typing: NodeTyping | None = None) -> EmbeddingStore:
    """Initialise from a trained skip-gram model.

    P takes the skip-gram target matrix; every aspect matrix takes the
    skip-gram context matrix plus its own Gaussian noise (clipped at 3 sigma)
    so the aspects start out distinguishable.
    """
    if not config.warmup:
        return init_random(graph.node_count, config.d, config.K, config.seed, config.init_scale)
    dw = train_deepwalk(graph, config, corpus, typing=typing, epochs=config.warmup_epochs)
    sigma = config.warmup_sigma
    rng = np.random.default_rng([config.seed, 7919])
    noise = np.clip(rng.normal(0.0, sigma, size=(config.K,) + dw.P.shape), -3 * sigma, 3 * sigma)
    Q = (dw.Q[0][None, :, :].astype(np.float64) + noise).astype(DTYPE)
    return EmbeddingStore(dw.P.copy(), Q, list(graph.labels))


def train(graph: Graph, config: TrainerConfig, corpus: WalkCorpus | None = None,
          store: EmbeddingStore | None = None, typing: NodeTyping | None = None) -> EmbeddingStore:
    """Multi-aspect training; returns the store with U populated.

    ``store`` skips initialisation (and warm-up) when given.
    """
    t0 = time.perf_counter()
    corpus = _corpus_for(graph, config, corpus)
    typing = typing or NodeTyping.homogeneous(graph.node_count)
    if store is None:
        store = warmup_init(graph, config, corpus, typing)
    if store.K != config.K or store.d != config.d:
        raise ValueError("store shape does not match config")
    tlog = _run(store, corpus, config, typing, False, config.epochs, 0)
    store.labels = list(graph.labels)
    store.meta.update(config=config.to_dict(), mode="asp2vec", training_log=tlog.records,
                      graph=graph.fingerprint(), seconds=round(time.perf_counter() - t0, 3))
    finalize_embeddings(store)
    return store
