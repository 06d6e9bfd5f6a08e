"""Graph-cut objectives, their weighted-kernel-k-means kernels, and the power-law cut driver.

Each cut objective has a kernel ``K`` and point weights ``w`` under which the
weighted kernel k-means objective equals the cut objective plus a term that
depends only on ``k``:

    NCUT    K = rho D^-1 + D^-1 A D^-1   w = deg
    RASSOC  K = rho I + A                w = 1    (negated association)
    RCUT    K = rho I - L                w = 1

``rho`` shifts the diagonal so the weighted kernel is positive semi-definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateCluster, InvalidInput
from .partition import NEW, Partition, PYParams, WeightedGraph
from .solver import RunResult, SolverConfig, run

NCUT = "ncut"
RCUT = "rcut"
RASSOC = "rassoc"
KINDS = (NCUT, RCUT, RASSOC)
AUTO = "auto"

DENSE_MAX_N = 5000
EIGEN_MAX_N = 2000


def _as_index(g: WeightedGraph, S):
    S = np.asarray(S)
    if S.dtype == bool:
        return np.flatnonzero(S)
    return S.astype(np.int64)


def cut(g: WeightedGraph, S, T) -> float:
    """Sum of A_ij over i in S, j in T."""
    S, T = _as_index(g, S), _as_index(g, T)
    if len(S) == 0 or len(T) == 0:
        return 0.0
    return float(g.adjacency[S][:, T].sum())


def degree(g: WeightedGraph, S) -> float:
    return float(g.degrees[_as_index(g, S)].sum())


def _cluster_stats(g: WeightedGraph, p: Partition):
    Z = sp.csr_matrix((np.ones(p.n), (np.arange(p.n), p.assign)), shape=(p.n, p.k))
    assoc = np.asarray((Z.T @ g.adjacency @ Z).diagonal()).ravel()
    deg = np.bincount(p.assign, weights=g.degrees, minlength=p.k)
    return assoc, deg, np.asarray(p.sizes, dtype=np.float64)


def cut_objective(g: WeightedGraph, p: Partition, kind: str = NCUT) -> float:
    """NCut / RCut (minimized) or ratio association (maximized) of a partition."""
    if p.n != g.n:
        raise InvalidInput(f"partition has {p.n} points, graph has {g.n} nodes")
    assoc, deg, size = _cluster_stats(g, p)
    outgoing = deg - assoc
    if kind == NCUT:
        if np.any(deg <= 0):
            raise DegenerateCluster("normalized cut undefined for a cluster with zero degree")
        return float(np.sum(outgoing / deg))
    if kind == RCUT:
        return float(np.sum(outgoing / size))
    if kind == RASSOC:
        return float(np.sum(assoc / size))
    raise InvalidInput(f"unknown cut objective {kind!r}")


@dataclass
class KernelProblem:
    kernel: object  # ndarray, or scipy sparse matrix for large graphs
    weights: np.ndarray
    rho: float
    kind: str = NCUT

    @property
    def n(self) -> int:
        return self.kernel.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.kernel)

    def diag(self) -> np.ndarray:
        return np.asarray(self.kernel.diagonal()).ravel()

    def column(self, i: int) -> np.ndarray:
        if self.is_sparse:
            return self.kernel[:, [i]].toarray().ravel()
        return self.kernel[:, i]

    def dense(self) -> np.ndarray:
        return self.kernel.toarray() if self.is_sparse else np.asarray(self.kernel)

    def weighted_kernel(self) -> np.ndarray:
        s = np.sqrt(self.weights)
        return s[:, None] * self.dense() * s[None, :]


def _check_degrees(g: WeightedGraph):
    bad = np.flatnonzero(g.degrees <= 0)
    if len(bad):
        raise InvalidInput(
            f"{len(bad)} node(s) have zero degree (first: {bad[0]}); normalized cut needs "
            "positive degrees, add self-loops or prune isolated nodes"
        )


def _base_matrix(g: WeightedGraph, kind: str):
    """The kernel without its rho term, as a sparse matrix."""
    A = g.adjacency
    if kind == NCUT:
        _check_degrees(g)
        Dinv = sp.diags(1.0 / g.degrees)
        return (Dinv @ A @ Dinv).tocsr()
    if kind == RASSOC:
        return A.copy()
    if kind == RCUT:
        return (A - sp.diags(g.degrees)).tocsr()
    raise InvalidInput(f"unknown cut objective {kind!r}")


def _shift_matrix(g: WeightedGraph, kind: str):
    """Matrix multiplied by rho."""
    if kind == NCUT:
        return sp.diags(1.0 / g.degrees)
    return sp.identity(g.n, format="csr")


def psd_shift(g: WeightedGraph, kind: str = NCUT, estimate: bool | None = None) -> float:
    """Smallest rho >= 0 making the weighted kernel positive semi-definite.

    Uses a dense eigensolve when ``estimate`` is true (default: n <= 2000);
    otherwise a safe upper bound: 1 for NCUT, a Gershgorin bound otherwise.
    """
    if estimate is None:
        estimate = g.n <= EIGEN_MAX_N
    A = g.adjacency
    if kind == NCUT:
        _check_degrees(g)
        if not estimate:
            return 1.0
        s = 1.0 / np.sqrt(g.degrees)
        M = s[:, None] * A.toarray() * s[None, :]
        return max(0.0, -float(np.linalg.eigvalsh(M)[0]))
    if kind == RASSOC:
        if not estimate:
            return float(np.max(np.abs(A).sum(axis=1))) if g.n else 0.0
        return max(0.0, -float(np.linalg.eigvalsh(A.toarray())[0]))
    if kind == RCUT:
        L = sp.diags(g.degrees) - A
        if not estimate:
            Ld = np.asarray(L.diagonal()).ravel()
            off = np.asarray(abs(L).sum(axis=1)).ravel() - np.abs(Ld)
            return float(np.max(Ld + off)) if g.n else 0.0
        return max(0.0, float(np.linalg.eigvalsh(L.toarray())[-1]))
    raise InvalidInput(f"unknown cut objective {kind!r}")


def build_kernel(g: WeightedGraph, kind: str = NCUT, rho=AUTO, dense: bool | None = None) -> KernelProblem:
    if kind not in KINDS:
        raise InvalidInput(f"unknown cut objective {kind!r}")
    base = _base_matrix(g, kind)
    if rho is None or rho == AUTO:
        rho = psd_shift(g, kind)
    rho = float(rho)
    K = (base + rho * _shift_matrix(g, kind)).tocsr()
    if dense is None:
        dense = g.n <= DENSE_MAX_N
    if dense:
        K = K.toarray()
    w = g.degrees.copy() if kind == NCUT else np.ones(g.n)
    return KernelProblem(K, w, rho, kind)


def kernel_point_to_mean_sq(kp: KernelProblem, p: Partition, i: int, c: int) -> float:
    """w_i * ||phi(x_i) - mean_c||^2 in kernel feature space, from scratch."""
    idx = p.members(c)
    if len(idx) == 0:
        raise InvalidInput(f"cluster {c} is empty")
    w = kp.weights[idx]
    s = w.sum()
    if kp.is_sparse:
        Kc = kp.kernel[idx][:, idx].toarray()
        Ki = kp.kernel[[i]][:, idx].toarray().ravel()
        Kii = kp.kernel[i, i]
    else:
        Kc = kp.kernel[np.ix_(idx, idx)]
        Ki = kp.kernel[i, idx]
        Kii = kp.kernel[i, i]
    val = Kii - 2.0 * (Ki @ w) / s + (w @ Kc @ w) / (s * s)
    return float(kp.weights[i] * val)


class KernelGeometry:
    """Geometry oracle over an implicit feature space given by a kernel.

    A cluster mean is represented by the column ``K m_c`` (``m_c`` the
    normalized member weights) and the cached self term ``m_c' K m_c``; both
    are frozen between mean updates, as in the vector case.
    """

    def __init__(self, kp: KernelProblem):
        self.kp = kp
        self.n = kp.n
        self.weights = kp.weights
        self.kdiag = kp.diag()
        self.cross = np.zeros((self.n, 0))
        self.self_term = np.zeros(0)

    def distances(self, i):
        return self.weights[i] * (self.kdiag[i] - 2.0 * self.cross[i] + self.self_term)

    def point_to_mean_sq(self, i, c):
        return float(self.weights[i] * (self.kdiag[i] - 2.0 * self.cross[i, c] + self.self_term[c]))

    def note_move(self, i, src, dst, src_emptied):
        if dst == NEW:
            self.cross = np.column_stack([self.cross, self.kp.column(i)])
            self.self_term = np.append(self.self_term, self.kdiag[i])
        if src_emptied:
            self.cross = np.delete(self.cross, src, axis=1)
            self.self_term = np.delete(self.self_term, src)

    def update_means(self, p):
        w = self.weights
        tot = np.bincount(p.assign, weights=w, minlength=p.k)
        m = w / tot[p.assign]
        M = sp.csr_matrix((m, (np.arange(p.n), p.assign)), shape=(p.n, p.k))
        C = M.T @ self.kp.kernel
        C = C.toarray() if sp.issparse(C) else np.asarray(C)
        self.cross = np.ascontiguousarray(C.T)
        self.self_term = np.bincount(p.assign, weights=m * self.cross[np.arange(p.n), p.assign], minlength=p.k)

    def fit(self, p):
        idx = np.arange(p.n)
        d = self.kdiag - 2.0 * self.cross[idx, p.assign] + self.self_term[p.assign]
        return float(np.sum(self.weights * d))


def kernel_kmeans_objective(kp: KernelProblem, p: Partition) -> float:
    """Weighted kernel k-means objective with optimal (weighted mean) centers."""
    geom = KernelGeometry(kp)
    geom.update_means(p)
    return geom.fit(p)


def power_law_cut(g: WeightedGraph, kind: str, params: PYParams, config: SolverConfig,
                  rho=AUTO) -> RunResult:
    """Cluster a graph by minimizing cut(kind) + lambda * r(Z) in kernel space."""
    if config.params != params:
        config = SolverConfig(params, config.max_sweeps, config.order, config.restarts,
                              config.seed, config.allow_new)
    kp = build_kernel(g, kind, rho)
    geom = KernelGeometry(kp)
    res = run(geom, config, track=lambda p: cut_objective(g, p, kind))
    res.extra["cut_trace"] = res.extra.pop("tracked_trace")
    res.extra.update({"mode": "graph", "objective_kind": kind, "rho": kp.rho})
    return res
