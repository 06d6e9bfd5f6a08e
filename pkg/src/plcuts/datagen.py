"""Synthetic data: Pitman-Yor CRP partitions, stochastic block models, blobs, similarity graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import pdist, squareform

from .errors import InvalidInput
from .partition import Partition, PYParams, VectorDataset, WeightedGraph

NONE = "none"
KNN = "knn"
EPS = "eps"


def sample_pycrp(n: int, alpha: float, theta: float, seed=None) -> Partition:
    """Seat ``n`` customers by the two-parameter Chinese restaurant process.

    Customer ``i`` (``i`` already seated) joins table ``c`` with probability
    ``(n_c - theta) / (i + alpha)`` and opens a new table with probability
    ``(k theta + alpha) / (i + alpha)``.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    PYParams(alpha, theta, 0.0)  # validates
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    assign = np.empty(n, dtype=np.int64)
    assign[0] = 0
    sizes = [1]
    for i in range(1, n):
        k = len(sizes)
        x = u[i] * (i + alpha)
        # the new-table slot sits first so the walk over tables can stop early
        x -= k * theta + alpha
        if x < 0:
            assign[i] = k
            sizes.append(1)
            continue
        c = 0
        for c in range(k):
            x -= sizes[c] - theta
            if x < 0:
                break
        assign[i] = c
        sizes[c] += 1
    return Partition(assign, sizes)


@dataclass(frozen=True)
class SbmSpec:
    """Pitman-Yor stochastic block model; block probabilities drawn from two normals.

    ``diag`` / ``offdiag`` are ``(mean, variance)`` pairs.
    """

    n: int
    alpha: float = 1.0
    theta: float = 0.2
    diag: tuple[float, float] = (0.3, 0.001)
    offdiag: tuple[float, float] = (0.01, 0.001)
    seed: int = 0

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "theta": self.theta,
            "diag_mean": self.diag[0],
            "diag_var": self.diag[1],
            "offdiag_mean": self.offdiag[0],
            "offdiag_var": self.offdiag[1],
            "seed": self.seed,
        }


def sample_block_matrix(k: int, spec: SbmSpec, rng) -> np.ndarray:
    off = rng.normal(spec.offdiag[0], np.sqrt(spec.offdiag[1]), size=(k, k))
    B = np.triu(off, 1)
    B = B + B.T
    B[np.diag_indices(k)] = rng.normal(spec.diag[0], np.sqrt(spec.diag[1]), size=k)
    return np.clip(B, 0.0, 1.0)


def sample_sbm(spec: SbmSpec, labels: Partition, seed=None, return_blocks: bool = False):
    """Unweighted SBM graph: edge (i, j), i < j, present with probability B[z_i, z_j]."""
    if labels.n != spec.n:
        raise InvalidInput(f"labels cover {labels.n} points, spec asks for {spec.n}")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    B = sample_block_matrix(labels.k, spec, rng)
    z = labels.assign
    n = spec.n
    rows, cols = [], []
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        P = B[z[start:stop]][:, z]
        hit = rng.random(P.shape) < P
        r, c = np.nonzero(hit)
        r = r + start
        keep = c > r
        rows.append(r[keep])
        cols.append(c[keep])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    A = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n)).tocsr()
    g = WeightedGraph(A + A.T, symmetrize=False)
    return (g, B) if return_blocks else g


def pycrp_sbm(spec: SbmSpec):
    """Labels from the Pitman-Yor CRP, then an SBM graph on them. Returns ``(graph, labels)``."""
    ss = np.random.SeedSequence(spec.seed)
    s_labels, s_graph = ss.spawn(2)
    labels = sample_pycrp(spec.n, spec.alpha, spec.theta, np.random.default_rng(s_labels))
    g = sample_sbm(spec, labels, seed=np.random.default_rng(s_graph))
    return g, labels


def median_sigma(points: np.ndarray) -> float:
    d = pdist(points)
    med = float(np.median(d)) if d.size else 0.0
    return med if med > 0 else 1.0


def gaussian_similarity_graph(data: VectorDataset, sigma, sparsify: str = NONE, param=None) -> WeightedGraph:
    """A_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)) off the diagonal.

    ``sparsify`` is ``"none"``, ``"knn"`` (keep each node's ``param`` nearest
    neighbours) or ``"eps"`` (drop weights below ``param``); the result is
    symmetrized by max.
    """
    X = data.points
    if sigma == "auto":
        sigma = median_sigma(X)
    sigma = float(sigma)
    if not sigma > 0:
        raise InvalidInput("sigma must be positive")
    D2 = squareform(pdist(X, "sqeuclidean")) if data.n > 1 else np.zeros((1, 1))
    A = np.exp(-D2 / (2.0 * sigma * sigma))
    np.fill_diagonal(A, 0.0)
    if sparsify == KNN:
        kk = int(param)
        if kk < data.n - 1:
            D = D2.copy()
            np.fill_diagonal(D, np.inf)
            nearest = np.argsort(D, axis=1, kind="stable")[:, :kk]
            mask = np.zeros_like(A, dtype=bool)
            mask[np.arange(data.n)[:, None], nearest] = True
            A = np.where(mask, A, 0.0)
    elif sparsify == EPS:
        A = np.where(A >= float(param), A, 0.0)
    elif sparsify != NONE:
        raise InvalidInput(f"unknown sparsification {sparsify!r}")
    return WeightedGraph(A)


def sample_power_law_blobs(n: int, d: int, alpha: float = 1.0, theta: float = 0.5, blob_std: float = 0.05,
                           box: tuple[float, float] = (0.0, 1.0), seed=0):
    """Isotropic Gaussian blobs with Pitman-Yor CRP cluster sizes. Returns ``(data, labels)``."""
    if not blob_std >= 0:
        raise InvalidInput("blob_std must be nonnegative")
    ss = np.random.SeedSequence(seed)
    s_labels, s_points = ss.spawn(2)
    labels = sample_pycrp(n, alpha, theta, np.random.default_rng(s_labels))
    rng = np.random.default_rng(s_points)
    centers = rng.uniform(box[0], box[1], size=(labels.k, d))
    X = centers[labels.assign] + blob_std * rng.standard_normal((n, d))
    return VectorDataset(X), labels


def minmax_normalize(X: np.ndarray) -> np.ndarray:
    """Per-column min-max scaling to [0, 1]; constant columns map to 0."""
    X = np.asarray(X, dtype=np.float64)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    return out
