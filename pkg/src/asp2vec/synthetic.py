"""Small synthetic graphs with known structure, for tests and demos."""
from __future__ import annotations

import numpy as np

from .graph import Graph, from_edges


def two_cliques(size: int = 6, bridge: bool = False) -> Graph:
    edges = []
    for base in (0, size):
        edges += [(base + a, base + b) for a in range(size) for b in range(a + 1, size)]
    if bridge:
        edges.append((size - 1, size))
    return from_edges(np.array(edges), 2 * size, directed=False)


def planted_partition(n_groups: int, size: int, p_in: float, p_out: float, seed: int = 0) -> tuple[Graph, np.ndarray]:
    rng = np.random.default_rng(seed)
    n = n_groups * size
    group = np.repeat(np.arange(n_groups), size)
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(group[iu] == group[ju], p_in, p_out)
    keep = rng.random(len(p)) < p
    return from_edges(np.stack([iu[keep], ju[keep]], axis=1), n, directed=False), group


def overlapping_communities(n: int = 400, n_comms: int = 8, max_memberships: int = 3,
                            avg_degree: float = 10.0, p_noise: float = 0.002,
                            seed: int = 0, directed: bool = False) -> tuple[Graph, list[list[int]]]:
    """Nodes join 1..max_memberships communities; edges form inside shared ones.

    Each node spreads its edges over its communities, so high-membership
    nodes have several distinct neighbourhoods (the multi-aspect case).
    """
    rng = np.random.default_rng(seed)
    memberships = [sorted(rng.choice(n_comms, size=rng.integers(1, max_memberships + 1), replace=False).tolist())
                   for _ in range(n)]
    members = [[] for _ in range(n_comms)]
    for v, ms in enumerate(memberships):
        for c in ms:
            members[c].append(v)
    edges = set()
    for v, ms in enumerate(memberships):
        per = max(1, int(round(avg_degree / 2 / len(ms))))
        for c in ms:
            pool = [u for u in members[c] if u != v]
            if not pool:
                continue
            for u in rng.choice(pool, size=min(per, len(pool)), replace=False):
                edges.add((v, int(u)) if directed else (min(v, int(u)), max(v, int(u))))
    n_noise = rng.binomial(n * (n - 1) // 2, p_noise)
    for _ in range(n_noise):
        a, b = rng.choice(n, size=2, replace=False)
        edges.add((int(a), int(b)) if directed else (int(min(a, b)), int(max(a, b))))
    arr = np.array(sorted(edges), dtype=np.int64)
    arr = arr[rng.permutation(len(arr))]
    return from_edges(arr, n, directed=directed), memberships


def author_paper_graph(n_authors: int = 100, n_papers: int = 400, n_topics: int = 5,
                       authors_per_paper: int = 4, topics_per_author: int = 1,
                       seed: int = 0) -> tuple[Graph, np.ndarray]:
    """Bipartite A-P graph: each paper has one topic, authors span a few topics.

    Returns the typed graph (types ``A`` and ``P``) and the paper topics.
    """
    rng = np.random.default_rng(seed)
    author_topics = [rng.choice(n_topics, size=topics_per_author, replace=False) for _ in range(n_authors)]
    by_topic = [[a for a in range(n_authors) if t in author_topics[a]] for t in range(n_topics)]
    paper_topic = rng.integers(0, n_topics, size=n_papers)
    edges = []
    for p in range(n_papers):
        pool = by_topic[paper_topic[p]] or list(range(n_authors))
        for a in rng.choice(pool, size=min(authors_per_paper, len(pool)), replace=False):
            edges.append((int(a), n_authors + p))
    labels = [f"a{i}" for i in range(n_authors)] + [f"p{i}" for i in range(n_papers)]
    g = from_edges(np.array(edges), n_authors + n_papers, directed=False, labels=labels)
    types = np.array([0] * n_authors + [1] * n_papers, dtype=np.int32)
    return g.with_types(types, ["A", "P"]), paper_topic
