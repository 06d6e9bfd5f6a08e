"""Core data model: partitions, weighted graphs, vector datasets, Pitman-Yor parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput

# Marker for "open a new cluster" in move/candidate positions.
NEW = -1


class Partition:
    """Hard clustering of ``n`` points into ``k`` nonempty clusters with dense ids.

    Mutable with a single writer (the solver run that owns it). Cluster ids are
    always ``0..k-1``; when a cluster empties it is removed and every id above
    it shifts down by one, so id order is stable and runs are reproducible.
    """

    __slots__ = ("assign", "sizes")

    def __init__(self, assign: np.ndarray, sizes: list[int]):
        self.assign = assign
        self.sizes = sizes

    @property
    def n(self) -> int:
        return len(self.assign)

    @property
    def k(self) -> int:
        return len(self.sizes)

    def copy(self) -> "Partition":
        return Partition(self.assign.copy(), list(self.sizes))

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assign == c)

    def move_point(self, i: int, target: int) -> "Partition":
        """Reassign point ``i`` to cluster ``target`` (or ``NEW``); in place."""
        src = int(self.assign[i])
        if target == src:
            return self
        if target != NEW and not 0 <= target < self.k:
            raise InvalidInput(f"cluster {target} does not exist (k={self.k})")
        if target == NEW:
            self.sizes.append(0)
            target = self.k - 1
        self.assign[i] = target
        self.sizes[target] += 1
        self.sizes[src] -= 1
        if self.sizes[src] == 0:
            del self.sizes[src]
            self.assign[self.assign > src] -= 1
        return self

    def check(self) -> None:
        """Raise AssertionError if any invariant is broken."""
        assert self.k >= 1 or self.n == 0
        assert all(s >= 1 for s in self.sizes)
        assert sum(self.sizes) == self.n
        assert self.assign.min() >= 0 and self.assign.max() < self.k
        counts = np.bincount(self.assign, minlength=self.k)
        assert counts.tolist() == self.sizes

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.sizes == other.sizes and np.array_equal(self.assign, other.assign)

    def __repr__(self) -> str:
        return f"Partition(n={self.n}, k={self.k}, sizes={self.sizes})"


def partition_from_assignments(assign) -> Partition:
    """Compact arbitrary nonnegative labels to dense ids by first appearance.

    >>> partition_from_assignments([0, 0, 1, 3]).assign.tolist()
    [0, 0, 1, 2]
    """
    a = np.asarray(assign)
    if a.size == 0:
        raise InvalidInput("assignment vector is empty")
    if a.ndim != 1:
        raise InvalidInput("assignment vector must be one-dimensional")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.equal(np.mod(a, 1), 0)):
            raise InvalidInput("cluster labels must be integers")
        a = a.astype(np.int64)
    if a.min() < 0:
        raise InvalidInput("cluster labels must be nonnegative")
    _, first, inverse = np.unique(a, return_index=True, return_inverse=True)
    # rank unique labels by first appearance
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(len(order))
    dense = relabel[inverse].astype(np.int64)
    sizes = np.bincount(dense).tolist()
    return Partition(dense, sizes)


def singletons(n: int) -> Partition:
    return Partition(np.arange(n, dtype=np.int64), [1] * n)


def single_cluster(n: int) -> Partition:
    return Partition(np.zeros(n, dtype=np.int64), [n])


@dataclass(frozen=True)
class PYParams:
    """Regularization parameters: concentration ``alpha``, discount ``theta``, trade-off ``lam``."""

    alpha: float = 1.0
    theta: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise InvalidInput(f"theta must lie in [0, 1), got {self.theta}")
        if not self.alpha + self.theta > 0.0:
            raise InvalidInput(f"need alpha + theta > 0, got alpha={self.alpha}, theta={self.theta}")
        if self.lam < 0.0:
            raise InvalidInput(f"lambda must be nonnegative, got {self.lam}")

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "theta": self.theta, "lambda": self.lam}


class WeightedGraph:
    """Undirected graph with nonnegative weights stored as symmetric CSR.

    Asymmetric input is symmetrized with ``max(A_ij, A_ji)``.
    """

    def __init__(self, adjacency, symmetrize: bool = True):
        A = sp.csr_matrix(adjacency, dtype=np.float64)
        if A.shape[0] != A.shape[1]:
            raise InvalidInput(f"adjacency must be square, got {A.shape}")
        if A.nnz and A.data.min() < 0:
            raise InvalidInput("negative edge weights are not supported")
        if symmetrize:
            A = A.maximum(A.T).tocsr()
        A.eliminate_zeros()
        A.sort_indices()
        self.adjacency = A
        self.degrees = np.asarray(A.sum(axis=1)).ravel()

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def nnz(self) -> int:
        return self.adjacency.nnz

    def dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def subgraph(self, nodes) -> "WeightedGraph":
        nodes = np.asarray(nodes)
        return WeightedGraph(self.adjacency[nodes][:, nodes], symmetrize=False)

    @classmethod
    def from_edges(cls, n: int, rows, cols, weights=None) -> "WeightedGraph":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        w = np.ones(len(rows)) if weights is None else np.asarray(weights, dtype=np.float64)
        # duplicates resolve by max, matching the symmetrization policy
        return cls(_max_duplicates(n, rows, cols, w))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, nnz={self.nnz})"


def _max_duplicates(n, rows, cols, w):
    order = np.lexsort((-w, cols, rows))
    r, c, v = rows[order], cols[order], w[order]
    keep = np.ones(len(r), dtype=bool)
    keep[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    return sp.csr_matrix((v[keep], (r[keep], c[keep])), shape=(n, n))


@dataclass
class VectorDataset:
    points: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.points, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] < 1 or X.shape[0] < 1:
            raise InvalidInput(f"points must be an n x d matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidInput("all coordinates must be finite")
        self.points = X
        if self.weights is None:
            self.weights = np.ones(X.shape[0])
        else:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (X.shape[0],) or np.any(w <= 0):
                raise InvalidInput("weights must be n positive reals")
            self.weights = w

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "VectorDataset":
        return VectorDataset(self.points[idx], self.weights[idx])
