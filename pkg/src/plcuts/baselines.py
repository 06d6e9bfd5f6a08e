"""Comparison algorithms: fixed-k weighted kernel k-means, Lloyd k-means, pyp-means."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInput
from .graphcuts import KernelGeometry, KernelProblem
from .partition import NEW, Partition, PYParams, VectorDataset, partition_from_assignments
from .solver import FIXED, RunResult, SolverConfig, descend


def _kernel_kmeanspp(kp: KernelProblem, k: int, rng) -> np.ndarray:
    """Seed k centers by k-means++ on feature-space distances; return initial labels."""
    n = kp.n
    diag = kp.diag()
    w = kp.weights
    first = int(rng.choice(n, p=w / w.sum()))
    centers = [first]
    col = kp.column(first)
    best = np.maximum(diag + diag[first] - 2.0 * col, 0.0)
    labels = np.zeros(n, dtype=np.int64)
    for c in range(1, k):
        score = w * best
        total = score.sum()
        if total <= 0:
            cand = np.setdiff1d(np.arange(n), centers)
            nxt = int(rng.choice(cand))
        else:
            nxt = int(rng.choice(n, p=score / total))
        centers.append(nxt)
        col = kp.column(nxt)
        d = np.maximum(diag + diag[nxt] - 2.0 * col, 0.0)
        closer = d < best
        labels[closer] = c
        best = np.where(closer, d, best)
    labels[centers] = np.arange(k)
    return labels


def _reseed(geom, p: Partition, k: int) -> int:
    """Split off the point farthest from its mean until ``p`` has ``k`` clusters."""
    count = 0
    while p.k < k:
        geom.update_means(p)
        far = np.array([geom.point_to_mean_sq(i, int(p.assign[i])) for i in range(p.n)])
        far[np.asarray(p.sizes)[p.assign] == 1] = -np.inf
        i = int(np.argmax(far))
        src = int(p.assign[i])
        p.move_point(i, NEW)
        geom.note_move(i, src, NEW, False)
        count += 1
    geom.update_means(p)
    return count


def weighted_kernel_kmeans(kp: KernelProblem, k: int, init=0, max_sweeps: int = 100) -> RunResult:
    """Fixed-k weighted kernel k-means with sequential (point-by-point) assignment.

    ``init`` is a seed (kernel k-means++ seeding) or an initial assignment.
    This is the power-law solver with the regularizer switched off and
    cluster creation disabled.
    """
    if k < 1:
        raise InvalidInput("k must be >= 1")
    if k > kp.n:
        raise InvalidInput(f"k={k} exceeds the number of points {kp.n}")
    if isinstance(init, (int, np.integer)):
        seed = int(init)
        labels = _kernel_kmeanspp(kp, k, np.random.default_rng(seed))
    else:
        seed = None
        labels = init.assign if isinstance(init, Partition) else np.asarray(init)
    p = partition_from_assignments(labels)
    geom = KernelGeometry(kp)
    reseeds = _reseed(geom, p, k) if p.k < k else 0
    config = SolverConfig(PYParams(1.0, 0.0, 0.0), max_sweeps=max_sweeps, order=FIXED, allow_new=False)
    res = descend(geom, p, config)
    res.seed = seed
    res.extra.update({"baseline": "weighted_kernel_kmeans", "k_requested": k, "reseeds": reseeds})
    return res


def _kmeanspp(X, w, k, rng):
    n = X.shape[0]
    centers = [int(rng.choice(n, p=w / w.sum()))]
    best = np.sum((X - X[centers[0]]) ** 2, axis=1)
    for _ in range(1, k):
        score = w * best
        total = score.sum()
        if total <= 0:
            nxt = int(rng.choice(np.setdiff1d(np.arange(n), centers)))
        else:
            nxt = int(rng.choice(n, p=score / total))
        centers.append(nxt)
        best = np.minimum(best, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[centers].copy()


def _sqdist(X, M):
    return np.maximum((X * X).sum(1)[:, None] - 2.0 * X @ M.T + (M * M).sum(1)[None, :], 0.0)


def kmeans(data: VectorDataset, k: int, init=0, max_iters: int = 300) -> RunResult:
    """Weighted Lloyd iterations; empty clusters are reseeded with the farthest point."""
    X, w = data.points, data.weights
    n = data.n
    if k < 1 or k > n:
        raise InvalidInput(f"k must lie in [1, {n}], got {k}")
    if isinstance(init, (int, np.integer)):
        seed = int(init)
        M = _kmeanspp(X, w, k, np.random.default_rng(seed))
    else:
        seed = None
        M = np.asarray(init, dtype=np.float64).copy()
        if M.shape != (k, data.d):
            raise InvalidInput(f"initial centers must have shape ({k}, {data.d})")
    trace, k_trace = [], []
    labels = None
    converged = False
    reseeds = 0
    it = 0
    for it in range(1, max_iters + 1):
        D = _sqdist(X, M)
        new = np.argmin(D, axis=1)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            far = int(np.argmax(D[np.arange(n), new]))
            new[far] = c
            D[far] = 0.0
            reseeds += 1
        trace.append(float(np.sum(w * ((X - M[new]) ** 2).sum(1))))
        tot = np.bincount(new, weights=w, minlength=k)
        M = np.zeros_like(M)
        np.add.at(M, new, w[:, None] * X)
        M /= tot[:, None]
        trace.append(float(np.sum(w * ((X - M[new]) ** 2).sum(1))))
        k_trace.append(int(np.count_nonzero(tot)))
        if labels is not None and np.array_equal(new, labels):
            converged = True
            labels = new
            break
        labels = new
    p = partition_from_assignments(labels)
    return RunResult(
        partition=p,
        objective_trace=trace[1::2],
        k_trace=k_trace,
        sweeps_used=it,
        converged=converged,
        seed=seed,
        phase_trace=trace,
        extra={"baseline": "kmeans", "k_requested": k, "reseeds": reseeds},
    )


def pyp_objective(data: VectorDataset, p: Partition, lam: float, theta: float, squared: bool = False) -> float:
    """Sum of (unsquared by default) distances to cluster means plus (lam - theta ln k) k."""
    X = data.points
    tot = np.bincount(p.assign, minlength=p.k).astype(np.float64)
    M = np.zeros((p.k, data.d))
    np.add.at(M, p.assign, X)
    M /= tot[:, None]
    d2 = np.sum((X - M[p.assign]) ** 2, axis=1)
    fit = float(np.sum(d2 if squared else np.sqrt(d2)))
    k = p.k
    return fit + (lam - math.log(k) * theta) * k


def pyp_means(data: VectorDataset, lam: float, theta: float, seed=0, max_iters: int = 100,
              squared: bool = False) -> RunResult:
    """dp-means-style local search on the pyp-means objective.

    Each pass visits points in a seeded random order; a point opens a new
    cluster (mean = the point) when its distance to every mean exceeds the
    marginal penalty of one more cluster, otherwise it joins the nearest
    mean. Means are recomputed and empty clusters dropped after each pass.
    """
    if not lam > 0:
        raise InvalidInput("lambda must be positive")
    if theta < 0:
        raise InvalidInput("theta must be nonnegative")
    X = data.points
    n = data.n
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=np.int64)
    means = [X.mean(axis=0)]
    trace, k_trace = [], []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        prev = labels.copy()
        M = np.array(means)
        for i in rng.permutation(n):
            diff = M - X[i]
            d = np.einsum("ij,ij->i", diff, diff)
            if not squared:
                d = np.sqrt(d)
            c = int(np.argmin(d))
            k = M.shape[0]
            penalty = lam - theta * ((k + 1) * math.log(k + 1) - k * math.log(k))
            if d[c] > penalty:
                M = np.vstack([M, X[i]])
                labels[i] = k
            else:
                labels[i] = c
        p = partition_from_assignments(labels)
        labels = p.assign
        tot = np.bincount(labels, minlength=p.k).astype(np.float64)
        Mn = np.zeros((p.k, data.d))
        np.add.at(Mn, labels, X)
        means = list(Mn / tot[:, None])
        trace.append(pyp_objective(data, p, lam, theta, squared))
        k_trace.append(p.k)
        if np.array_equal(prev, labels):
            converged = True
            break
    return RunResult(
        partition=partition_from_assignments(labels),
        objective_trace=trace,
        k_trace=k_trace,
        sweeps_used=it,
        converged=converged,
        seed=seed,
        extra={"baseline": "pyp_means", "lambda": lam, "theta": theta, "squared": squared},
    )
