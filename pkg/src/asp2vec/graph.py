"""Edge-list graphs stored as immutable CSR adjacency."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

COMMENT_PREFIXES = ("#", "%")


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or node-type input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Adjacency over dense integer ids ``0..node_count-1``.

    ``indptr``/``indices`` hold out-neighbors in insertion order. ``edges``
    keeps every stored edge once (undirected edges in their first-seen
    orientation), which is what splitting and export operate on.
    """

    node_count: int
    directed: bool
    indptr: np.ndarray
    indices: np.ndarray
    edges: np.ndarray
    labels: list[str] = field(default_factory=list)
    node_types: np.ndarray | None = None
    type_names: list[str] | None = None
    self_loops_dropped: int = 0

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.edges):
            arr.setflags(write=False)
        if self.node_types is not None:
            self.node_types.setflags(write=False)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, node: int) -> list[int]:
        if not 0 <= node < self.node_count:
            raise IndexError(f"node {node} out of range [0, {self.node_count})")
        return self.indices[self.indptr[node]:self.indptr[node + 1]].tolist()

    def degree(self, node: int) -> int:
        return int(self.indptr[node + 1] - self.indptr[node])

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def label(self, node: int) -> str:
        return self.labels[node] if self.labels else str(node)

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except AttributeError:
            object.__setattr__(self, "_label_index", {l: i for i, l in enumerate(self.labels)})
            return self._label_index[label]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.indices[self.indptr[u]:self.indptr[u + 1]]
        return bool(np.any(row == v))

    def edge_set(self) -> set[tuple[int, int]]:
        """Arcs as (u, v) pairs; both orientations for undirected graphs."""
        out = {(int(u), int(v)) for u, v in self.edges}
        if not self.directed:
            out |= {(v, u) for u, v in out}
        return out

    def type_of(self, node: int) -> str:
        if self.node_types is None:
            raise ValueError("graph has no node types")
        return self.type_names[self.node_types[node]]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(b"directed" if self.directed else b"undirected")
        h.update(np.ascontiguousarray(self.indptr, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.indices, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    def with_types(self, node_types: np.ndarray, type_names: list[str]) -> "Graph":
        node_types = np.asarray(node_types, dtype=np.int32)
        if node_types.shape != (self.node_count,):
            raise GraphFormatError("node type vector must cover every node")
        return Graph(self.node_count, self.directed, self.indptr, self.indices, self.edges,
                     self.labels, node_types, list(type_names), self.self_loops_dropped)

    def subgraph_edges(self, edges: np.ndarray) -> "Graph":
        """Same node set, keeping only ``edges`` (used for residual graphs)."""
        g = from_edges(np.asarray(edges, dtype=np.int64).reshape(-1, 2), self.node_count,
                       directed=self.directed, dedupe=False)
        return Graph(g.node_count, g.directed, g.indptr, g.indices, g.edges, self.labels,
                     self.node_types, self.type_names, 0)

    def to_edge_list(self) -> str:
        return "".join(f"{self.label(u)} {self.label(v)}\n" for u, v in self.edges)


def from_edges(edges: np.ndarray, node_count: int, directed: bool, dedupe: bool = True,
               labels: Sequence[str] | None = None) -> Graph:
    """Build a Graph from an (m, 2) integer array of edges."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges.min() < 0 or edges.max() >= node_count):
        raise GraphFormatError("edge endpoint out of range")
    loops = edges[:, 0] == edges[:, 1]
    n_loops = int(loops.sum())
    if n_loops:
        log.warning("dropped %d self-loop(s)", n_loops)
        edges = edges[~loops]
    if dedupe and len(edges):
        key = edges if directed else np.sort(edges, axis=1)
        _, first = np.unique(key, axis=0, return_index=True)
        edges = edges[np.sort(first)]
    if directed:
        src, dst = edges[:, 0], edges[:, 1]
    else:
        # interleave so each node sees its neighbors in edge order
        src = np.stack([edges[:, 0], edges[:, 1]], axis=1).ravel()
        dst = np.stack([edges[:, 1], edges[:, 0]], axis=1).ravel()
    order = np.argsort(src, kind="stable")
    indices = dst[order].astype(np.int32)
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=node_count), out=indptr[1:])
    return Graph(node_count, directed, indptr, indices, edges.copy(),
                 list(labels) if labels is not None else [str(i) for i in range(node_count)],
                 self_loops_dropped=n_loops)


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, Path):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    elif isinstance(source, str):
        yield from source.splitlines()
    else:
        yield from source


def load_edge_list(source, directed: bool = False, dedupe: bool = True,
                   extra_columns: str = "error") -> Graph:
    """Parse whitespace-separated ``source target`` lines.

    ``source`` is text, a ``Path`` or an iterable of lines. External ids are
    mapped to dense ids in first-appearance order. ``extra_columns="ignore"``
    accepts rating-style files with trailing columns (e.g. ``u v 1``).
    """
    ids: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tokens = line.split()
        if len(tokens) != 2 and not (extra_columns == "ignore" and len(tokens) > 2):
            raise GraphFormatError(f"line {lineno}: expected 2 tokens, got {len(tokens)}")
        u = ids.setdefault(tokens[0], len(ids))
        v = ids.setdefault(tokens[1], len(ids))
        pairs.append((u, v))
    if not pairs:
        raise GraphFormatError("edge list is empty")
    return from_edges(np.array(pairs, dtype=np.int64), len(ids), directed, dedupe, labels=list(ids))


def load_node_types(graph: Graph, source) -> Graph:
    """Attach types from ``node_id type_tag`` lines; every node must be typed."""
    types = [None] * graph.node_count
    names: dict[str, int] = {}
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'node_id type_tag'")
        try:
            node = graph.index_of(tokens[0])
        except KeyError:
            log.warning("line %d: node %r not in graph, ignored", lineno, tokens[0])
            continue
        types[node] = names.setdefault(tokens[1], len(names))
    missing = [graph.label(i) for i, t in enumerate(types) if t is None]
    if missing:
        raise GraphFormatError(f"{len(missing)} node(s) without a type, e.g. {missing[:3]}")
    return graph.with_types(np.array(types, dtype=np.int32), list(names))
