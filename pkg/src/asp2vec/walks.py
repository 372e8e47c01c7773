"""Truncated random walks and context-window iteration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numba import njit

from ._rng import next_below, stream_key
from .graph import Graph


@dataclass(frozen=True, eq=False)
class WalkCorpus:
    """Walks stored flat: walk ``k`` is ``nodes[offsets[k]:offsets[k+1]]``."""

    nodes: np.ndarray
    offsets: np.ndarray
    walks_per_node: int
    walk_length: int
    seed: int
    graph_hash: str = ""

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __getitem__(self, k: int) -> np.ndarray:
        return self.nodes[self.offsets[k]:self.offsets[k + 1]]

    def __iter__(self) -> Iterator[np.ndarray]:
        for k in range(len(self)):
            yield self[k]

    @property
    def walks(self) -> list[list[int]]:
        return [w.tolist() for w in self]

    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def node_frequencies(self, node_count: int) -> np.ndarray:
        return np.bincount(self.nodes, minlength=node_count)

    def same_as(self, other: "WalkCorpus") -> bool:
        return (np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.offsets, other.offsets))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# r={self.walks_per_node} L={self.walk_length} "
                     f"seed={self.seed} graph={self.graph_hash}\n")
            for w in self:
                fh.write(" ".join(map(str, w.tolist())) + "\n")

    @classmethod
    def load(cls, path, expect_graph: Graph | None = None) -> "WalkCorpus":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("#"):
                raise ValueError(f"{path}: missing corpus header")
            meta = dict(tok.split("=", 1) for tok in header[1:].split())
            walks = [np.array(line.split(), dtype=np.int32) for line in fh if line.strip()]
        if expect_graph is not None and meta.get("graph") != expect_graph.fingerprint():
            raise ValueError(f"{path}: corpus was generated from a different graph")
        return from_walks(walks, int(meta["r"]), int(meta["L"]), int(meta["seed"]),
                          meta.get("graph", ""))


@dataclass(frozen=True)
class ContextWindow:
    target: int
    context: list[int]


def from_walks(walks, r: int, L: int, seed: int, graph_hash: str = "") -> WalkCorpus:
    lengths = np.array([len(w) for w in walks], dtype=np.int64)
    offsets = np.zeros(len(walks) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    nodes = (np.concatenate([np.asarray(w, dtype=np.int32) for w in walks])
             if walks else np.zeros(0, dtype=np.int32))
    return WalkCorpus(nodes, offsets, r, L, seed, graph_hash)


@njit(cache=True)
def _uniform_walks(indptr, indices, starts, r, L, seed, salt):
    n_walks = len(starts) * r
    buf = np.empty(n_walks * L, dtype=np.int32)
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    state = np.zeros(1, dtype=np.uint64)
    pos = 0
    k = 0
    for v in starts:
        for w in range(r):
            state[0] = stream_key(seed + salt, v, w)
            cur = v
            buf[pos] = cur
            pos += 1
            for _ in range(L - 1):
                deg = indptr[cur + 1] - indptr[cur]
                if deg == 0:
                    break
                cur = indices[indptr[cur] + next_below(state, deg)]
                buf[pos] = cur
                pos += 1
            k += 1
            offsets[k] = pos
    return buf[:pos].copy(), offsets


@njit(cache=True)
def _typed_walks(indptr, indices, node_types, cycle, starts, r, L, seed, salt):
    n_walks = len(starts) * r
    period = len(cycle)
    buf = np.empty(n_walks * L, dtype=np.int32)
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    state = np.zeros(1, dtype=np.uint64)
    pos = 0
    k = 0
    for v in starts:
        for w in range(r):
            state[0] = stream_key(seed + salt, v, w)
            cur = v
            buf[pos] = cur
            pos += 1
            for t in range(L - 1):
                want = cycle[(t + 1) % period]
                lo = indptr[cur]
                hi = indptr[cur + 1]
                m = 0
                for e in range(lo, hi):
                    if node_types[indices[e]] == want:
                        m += 1
                if m == 0:
                    break
                pick = next_below(state, m)
                for e in range(lo, hi):
                    if node_types[indices[e]] == want:
                        if pick == 0:
                            cur = indices[e]
                            break
                        pick -= 1
                buf[pos] = cur
                pos += 1
            k += 1
            offsets[k] = pos
    return buf[:pos].copy(), offsets


def generate_walks(graph: Graph, r: int = 10, L: int = 80, seed: int = 0) -> WalkCorpus:
    """``r`` uniform walks of at most ``L`` nodes from every node.

    Each walk draws from its own stream keyed by (seed, start, walk index), so
    the corpus does not depend on generation order. Walks stop at sinks.
    """
    if r < 1 or L < 2:
        raise ValueError("need r >= 1 and L >= 2")
    starts = np.arange(graph.node_count, dtype=np.int64)
    nodes, offsets = _uniform_walks(graph.indptr, graph.indices, starts, r, L, seed, 0)
    return WalkCorpus(nodes, offsets, r, L, seed, graph.fingerprint())


def parse_scheme(scheme) -> list[str]:
    if isinstance(scheme, str):
        scheme = [s.strip() for s in scheme.split(",") if s.strip()]
    return list(scheme)


def metapath_walks(graph: Graph, schemes, r: int = 10, L: int = 80, seed: int = 0) -> WalkCorpus:
    """Meta-path guided walks; ``schemes`` like ``["A,P,A"]`` or ``[["A","P","A"]]``.

    The scheme repeats cyclically, so it must begin and end with one type.
    Walks stop when no neighbor has the required next type.
    """
    if graph.node_types is None:
        raise ValueError("metapath walks need a typed graph")
    if r < 1 or L < 2:
        raise ValueError("need r >= 1 and L >= 2")
    if isinstance(schemes, str) or all(isinstance(s, str) and "," not in s for s in schemes):
        # a bare tag list is one scheme; single-tag schemes are invalid anyway
        schemes = [schemes]
    type_ids = {name: i for i, name in enumerate(graph.type_names)}
    arc_types = graph.node_types[graph.edges]
    if not graph.directed:
        arc_types = np.vstack([arc_types, arc_types[:, ::-1]])
    schema = {(int(a), int(b)) for a, b in arc_types}
    chunks, offs = [], []
    for salt, scheme in enumerate(schemes):
        tags = parse_scheme(scheme)
        if len(tags) < 2:
            raise ValueError(f"scheme {scheme!r} needs at least two types")
        unknown = [t for t in tags if t not in type_ids]
        if unknown:
            raise ValueError(f"scheme {scheme!r} references unknown type(s) {unknown}")
        if tags[0] != tags[-1]:
            raise ValueError(f"scheme {scheme!r} must start and end with the same type")
        for a, b in zip(tags, tags[1:]):
            if (type_ids[a], type_ids[b]) not in schema:
                raise ValueError(f"scheme {scheme!r}: no {a}-{b} edge in the graph")
        cycle = np.array([type_ids[t] for t in tags[:-1]], dtype=np.int32)
        starts = np.flatnonzero(graph.node_types == cycle[0]).astype(np.int64)
        nodes, offsets = _typed_walks(graph.indptr, graph.indices, graph.node_types, cycle,
                                      starts, r, L, seed, salt)
        chunks.append(nodes)
        offs.append(offsets)
    nodes = np.concatenate(chunks)
    base = 0
    merged = [np.zeros(1, dtype=np.int64)]
    for o in offs:
        merged.append(o[1:] + base)
        base += o[-1]
    return WalkCorpus(nodes, np.concatenate(merged), r, L, seed, graph.fingerprint())


def context_windows(corpus: WalkCorpus, window: int = 3) -> Iterator[ContextWindow]:
    """Yield (target, context) for every walk position with a nonempty context."""
    if window < 1:
        raise ValueError("window must be >= 1")
    for walk in corpus:
        walk = walk.tolist()
        n = len(walk)
        for t in range(n):
            ctx = walk[max(0, t - window):t] + walk[t + 1:t + 1 + window]
            if ctx:
                yield ContextWindow(walk[t], ctx)
