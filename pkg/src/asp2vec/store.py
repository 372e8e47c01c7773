"""Trainable parameters: target matrix P and K aspect context matrices Q."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

DTYPE = np.float32


@dataclass(eq=False)
class EmbeddingStore:
    """``P`` is (n, d); ``Q`` is (K, n, d) so ``Q[s]`` is the aspect-s matrix."""

    P: np.ndarray
    Q: np.ndarray
    labels: list[str] = field(default_factory=list)
    U: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.Q.ndim != 3 or self.Q.shape[1:] != self.P.shape:
            raise ValueError(f"Q shape {self.Q.shape} incompatible with P {self.P.shape}")
        if not self.labels:
            self.labels = [str(i) for i in range(self.n)]

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def d(self) -> int:
        return self.P.shape[1]

    @property
    def K(self) -> int:
        return self.Q.shape[0]

    @property
    def parameter_count(self) -> int:
        return self.P.size + self.Q.size

    def copy(self) -> "EmbeddingStore":
        return EmbeddingStore(self.P.copy(), self.Q.copy(), list(self.labels),
                              None if self.U is None else self.U.copy(), dict(self.meta))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.P).all() and np.isfinite(self.Q).all())

    def matrix(self, which: str) -> np.ndarray:
        """``"U"``, ``"P"`` or ``"Q<s>"`` with 1-based aspect index."""
        if which == "U":
            return self.U if self.U is not None else finalize_embeddings(self)
        if which == "P":
            return self.P
        if which.startswith("Q") and which[1:].isdigit():
            s = int(which[1:])
            if 1 <= s <= self.K:
                return self.Q[s - 1]
        raise ValueError(f"unknown matrix {which!r} (use U, P or Q1..Q{self.K})")

    def save(self, path) -> None:
        """Lossless archive; ``meta`` (config, seed) is stored as JSON."""
        np.savez(path, P=self.P, Q=self.Q, U=self.matrix("U"),
                 labels=np.array(self.labels, dtype=object).astype(str),
                 meta=np.array(json.dumps(self.meta)))

    @classmethod
    def load(cls, path) -> "EmbeddingStore":
        with np.load(path, allow_pickle=False) as z:
            return cls(z["P"], z["Q"], z["labels"].tolist(), z["U"], json.loads(str(z["meta"])))


def init_random(n: int, d: int, K: int, seed: int = 0, scale: float | None = None) -> EmbeddingStore:
    """Uniform entries in [-scale, scale]; scale defaults to 0.5/d."""
    if n < 1 or d < 1 or K < 1:
        raise ValueError(f"dimensions must be positive, got n={n} d={d} K={K}")
    if scale is None:
        scale = 0.5 / d
    rng = np.random.default_rng(seed)
    P = rng.uniform(-scale, scale, size=(n, d)).astype(DTYPE)
    Q = rng.uniform(-scale, scale, size=(K, n, d)).astype(DTYPE)
    return EmbeddingStore(P, Q)


def finalize_embeddings(store: EmbeddingStore) -> np.ndarray:
    """U = P + mean over aspects of Q; cached on the store."""
    U = (store.P.astype(np.float64) + store.Q.astype(np.float64).mean(axis=0)).astype(DTYPE)
    store.U = U
    return U


def write_word2vec(path, matrix: np.ndarray, labels: list[str]) -> None:
    n, d = matrix.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {d}\n")
        for label, row in zip(labels, matrix):
            fh.write(label + " " + " ".join(f"{x:.6g}" for x in row) + "\n")


def read_word2vec(path) -> tuple[np.ndarray, list[str]]:
    with open(path, encoding="utf-8") as fh:
        n, d = map(int, fh.readline().split())
        labels, rows = [], []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != d + 1:
                raise ValueError(f"{path}: expected {d + 1} fields, got {len(parts)}")
            labels.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(rows) != n:
        raise ValueError(f"{path}: header says {n} rows, found {len(rows)}")
    return np.array(rows, dtype=DTYPE).reshape(n, d), labels
