"""Undirected user graph whose connected components are the cluster hypothesis."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class UserGraph:
    """Dense boolean adjacency over ``u`` users with lazily cached components.

    Edges can only be removed. Component labels are recomputed from scratch
    the first time they are needed after a deletion.
    """

    def __init__(self, adjacency: np.ndarray):
        adj = np.array(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        np.fill_diagonal(adj, False)
        self._adj = adj
        self._labels: np.ndarray | None = None

    @classmethod
    def complete(cls, u: int) -> "UserGraph":
        return cls(~np.eye(u, dtype=bool))

    @classmethod
    def empty(cls, u: int) -> "UserGraph":
        return cls(np.zeros((u, u), dtype=bool))

    @classmethod
    def erdos_renyi(cls, u: int, p: float, rng: np.random.Generator | int) -> "UserGraph":
        rng = np.random.default_rng(rng)
        upper = np.triu(rng.random((u, u)) < p, k=1)
        return cls(upper | upper.T)

    @property
    def u(self) -> int:
        return self._adj.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        view = self._adj.view()
        view.flags.writeable = False
        return view

    @property
    def n_edges(self) -> int:
        return int(self._adj.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self._adj, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._adj[i, j])

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self._adj[i])

    def remove_edges(self, i: int, others) -> int:
        others = np.asarray(others, dtype=int)
        if others.size == 0:
            return 0
        removed = int(self._adj[i, others].sum())
        self._adj[i, others] = False
        self._adj[others, i] = False
        if removed:
            self._labels = None
        return removed

    def labels(self) -> np.ndarray:
        if self._labels is None:
            _, self._labels = connected_components(csr_matrix(self._adj), directed=False)
        return self._labels

    @property
    def n_components(self) -> int:
        return int(self.labels().max()) + 1

    def component(self, i: int) -> np.ndarray:
        labels = self.labels()
        return np.flatnonzero(labels == labels[i])

    def partition(self) -> set[frozenset[int]]:
        labels = self.labels()
        return {frozenset(np.flatnonzero(labels == c).tolist()) for c in np.unique(labels)}
