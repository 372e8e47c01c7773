"""Link-prediction protocol: connectivity-preserving split, edge features,
logistic regression and AUC-ROC."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .graph import Graph
from .store import EmbeddingStore

log = logging.getLogger(__name__)

OPERATORS = ("hadamard", "average", "l1", "l2")


@dataclass(eq=False)
class EdgeSplit:
    train_pos: np.ndarray
    test_pos: np.ndarray
    train_neg: np.ndarray
    test_neg: np.ndarray
    residual_graph: Graph
    seed: int
    requested_test: int = 0

    def counts(self) -> dict:
        return {"train_pos": len(self.train_pos), "test_pos": len(self.test_pos),
                "train_neg": len(self.train_neg), "test_neg": len(self.test_neg),
                "requested_test": self.requested_test}

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        g = self.residual_graph
        meta = {"seed": self.seed, "graph": g.fingerprint(), "directed": g.directed, **self.counts()}
        for name in ("train_pos", "test_pos", "train_neg", "test_neg"):
            with open(directory / f"{name}.edges", "w", encoding="utf-8") as fh:
                fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
                for u, v in getattr(self, name):
                    fh.write(f"{g.label(u)} {g.label(v)}\n")

    @classmethod
    def load(cls, directory, graph: Graph) -> "EdgeSplit":
        """Re-create a saved split against the full graph it was drawn from."""
        directory = Path(directory)
        parts, meta = {}, {}
        for name in ("train_pos", "test_pos", "train_neg", "test_neg"):
            rows = []
            with open(directory / f"{name}.edges", encoding="utf-8") as fh:
                for line in fh:
                    if line.startswith("#"):
                        meta = json.loads(line[1:])
                        continue
                    a, b = line.split()
                    rows.append((graph.index_of(a), graph.index_of(b)))
            parts[name] = np.array(rows, dtype=np.int64).reshape(-1, 2)
        residual = graph.subgraph_edges(parts["train_pos"])
        return cls(parts["train_pos"], parts["test_pos"], parts["train_neg"], parts["test_neg"],
                   residual, int(meta.get("seed", 0)), int(meta.get("requested_test", 0)))


class _DisjointSet:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, x):
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def split_edges(graph: Graph, seed: int = 0, typed_negatives: bool = False) -> EdgeSplit:
    """Hold out half of the edges without disconnecting anything.

    Edges are visited in a random order; the first edge joining two
    components of the undirected projection is kept (a random spanning
    forest), every other edge may be removed without changing connectivity.
    The first floor(|E|/2) removable edges become positives for testing.
    Negatives are 2x that many distinct non-edges, split evenly.
    """
    edges = graph.edges
    m = len(edges)
    if m < 4:
        log.warning("graph has only %d edges; split will be tiny", m)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    forest = _DisjointSet(graph.node_count)
    removable = [k for k in perm if not forest.union(int(edges[k, 0]), int(edges[k, 1]))]
    want = m // 2
    if len(removable) < want:
        log.warning("only %d of %d edges can be removed while preserving connectivity",
                    len(removable), want)
    test_idx = np.array(removable[:want], dtype=np.int64)
    mask = np.ones(m, dtype=bool)
    mask[test_idx] = False
    test_pos = edges[test_idx].reshape(-1, 2)
    train_pos = edges[mask].reshape(-1, 2)
    negs = sample_non_edges(graph, 2 * len(test_pos), rng, typed_negatives)
    half = (len(negs) + 1) // 2
    residual = graph.subgraph_edges(train_pos)
    return EdgeSplit(train_pos, test_pos, negs[:half], negs[half:], residual, seed, want)


def sample_non_edges(graph: Graph, count: int, rng: np.random.Generator,
                     typed: bool = False) -> np.ndarray:
    """Distinct node pairs absent from the graph (either direction if undirected).

    Returns fewer than ``count`` pairs, with a warning, when the graph is
    too dense to supply them.
    """
    n = graph.node_count
    existing = graph.edge_set()
    if graph.directed:
        available = n * (n - 1) - len(existing)
    else:
        available = n * (n - 1) // 2 - len(existing) // 2
    typed = typed and graph.node_types is not None
    if not typed and count >= available // 2:
        # dense graph: enumerate every non-edge instead of rejection sampling
        cand = [(u, v) for u in range(n) for v in range(n)
                if u != v and (u, v) not in existing and (graph.directed or u < v)]
        cand = [cand[k] for k in rng.permutation(len(cand))]
        if len(cand) < count:
            log.warning("only %d non-edges exist; wanted %d", len(cand), count)
        return np.array(cand[:count], dtype=np.int64).reshape(-1, 2)
    pools = type_pairs = None
    if typed:
        pools = [np.flatnonzero(graph.node_types == t) for t in range(len(graph.type_names))]
        type_pairs = graph.node_types[graph.edges]
    seen: set[tuple[int, int]] = set()
    out = []
    attempts = 0
    while len(out) < count and attempts < 1000 * max(count, 1):
        attempts += 1
        if pools is None:
            u, v = (int(x) for x in rng.integers(0, n, size=2))
        else:
            tu, tv = type_pairs[rng.integers(len(type_pairs))]
            u, v = int(rng.choice(pools[tu])), int(rng.choice(pools[tv]))
        if u == v or (u, v) in existing:
            continue
        key = (u, v) if graph.directed else (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        out.append((u, v))
    if len(out) < count:
        log.warning("found only %d of %d typed non-edges", len(out), count)
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def edge_features(U: np.ndarray, edges, operator: str = "hadamard") -> np.ndarray:
    """Binary operator on endpoint embeddings; one row per edge."""
    edges = np.asarray(edges, dtype=np.int64)
    single = edges.ndim == 1
    edges = edges.reshape(-1, 2)
    a = U[edges[:, 0]].astype(np.float64)
    b = U[edges[:, 1]].astype(np.float64)
    if operator == "hadamard":
        out = a * b
    elif operator == "average":
        out = (a + b) / 2
    elif operator == "l1":
        out = np.abs(a - b)
    elif operator == "l2":
        out = (a - b) ** 2
    else:
        raise ValueError(f"unknown edge operator {operator!r}; choose from {OPERATORS}")
    return out[0] if single else out


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    loss: float
    n_iter: int
    converged: bool

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))


def logistic_objective(theta: np.ndarray, Xa: np.ndarray, y: np.ndarray, l2: float):
    """Mean log-loss + l2/2 ||w||^2 and its gradient; ``theta[-1]`` is the bias."""
    z = Xa @ theta
    w = theta[:-1]
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w)
    p = np.exp(-np.logaddexp(0.0, -z))
    grad = Xa.T @ (p - y) / len(y)
    grad[:-1] += l2 * w
    return loss, grad


def fit_logreg(X, y, l2: float = 1e-4, max_iter: int = 20000, tol: float = 1e-8) -> LogisticModel:
    """L2-regularised logistic regression by accelerated gradient descent.

    Nesterov momentum with backtracking on the step size and a gradient
    restart; stops when the gradient norm drops below ``tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if len(np.unique(y)) < 2:
        raise ValueError("logistic regression needs both classes")
    Xa = np.hstack([X, np.ones((len(X), 1))])
    x = np.zeros(Xa.shape[1])
    mom = x.copy()
    t = 1.0
    L = 1.0
    f_x, g_x = logistic_objective(x, Xa, y, l2)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(g_x) < tol:
            converged = True
            break
        f_m, g_m = logistic_objective(mom, Xa, y, l2)
        gg = g_m @ g_m
        while True:
            x_new = mom - g_m / L
            f_new, g_new = logistic_objective(x_new, Xa, y, l2)
            if f_new <= f_m - 0.5 * gg / L + 1e-15 * abs(f_m) or L > 1e16:
                break
            L *= 2.0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if f_new > f_x:
            # objective went up: drop momentum
            mom, t_new = x_new, 1.0
        else:
            mom = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, f_x, g_x, t = x_new, f_new, g_new, t_new
        L *= 0.9
    return LogisticModel(x[:-1], float(x[-1]), float(f_x), it, converged)


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass
class EvalReport:
    auc: float
    operator: str
    seed: int
    counts: dict
    classifier: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)


def evaluate(embeddings, split: EdgeSplit, operator: str = "hadamard", l2: float = 1e-4) -> EvalReport:
    """Fit on train_pos + train_neg, report AUC over test_pos + test_neg.

    ``embeddings`` is an EmbeddingStore or a (n, d) matrix trained on the
    residual graph only.
    """
    U = embeddings.matrix("U") if isinstance(embeddings, EmbeddingStore) else np.asarray(embeddings)
    if len(split.test_pos) == 0:
        raise ValueError("split has no test edges")
    X_train = np.vstack([edge_features(U, split.train_pos, operator),
                         edge_features(U, split.train_neg, operator)])
    y_train = np.r_[np.ones(len(split.train_pos)), np.zeros(len(split.train_neg))]
    model = fit_logreg(X_train, y_train, l2=l2)
    X_test = np.vstack([edge_features(U, split.test_pos, operator),
                        edge_features(U, split.test_neg, operator)])
    y_test = np.r_[np.ones(len(split.test_pos)), np.zeros(len(split.test_neg))]
    auc = auc_roc(model.decision_function(X_test), y_test)
    if not np.isfinite(auc):
        raise ValueError("non-finite AUC")
    classifier = {"l2": l2, "bias": model.bias, "weight_norm": float(np.linalg.norm(model.weights)),
                  "train_loss": model.loss, "iterations": model.n_iter, "converged": model.converged}
    return EvalReport(auc, operator, split.seed, split.counts(), classifier)
