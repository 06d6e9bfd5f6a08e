"""Power-law means: k-means-style descent on the EPPF-regularized weighted k-means objective.

The solver only sees geometry through a small oracle interface, so the same
sweep drives plain vectors (``VectorGeometry``) and implicit kernel feature
spaces (``graphcuts.KernelGeometry``).

Each sweep visits every point once and moves it to the cluster with the
smallest regularized distance. Cluster means stay frozen during a sweep,
except that a newly opened cluster takes its founding point as mean. Means
are recomputed after the sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .eppf import FORBIDDEN, EppfState, log_eppf
from .errors import InvalidInput
from .partition import NEW, Partition, PYParams, VectorDataset, single_cluster

FIXED = "fixed"
SHUFFLED = "shuffled"

# relative slack under which a candidate does not beat staying put
_TIE_RTOL = 1e-12


class GeometryOracle(Protocol):
    n: int
    weights: np.ndarray

    def distances(self, i: int) -> np.ndarray:
        """w_i * squared distance from point i to every current cluster mean."""

    def point_to_mean_sq(self, i: int, c: int) -> float: ...

    def note_move(self, i: int, src: int, dst: int, src_emptied: bool) -> None: ...

    def update_means(self, p: Partition) -> None: ...

    def fit(self, p: Partition) -> float:
        """Weighted sum of squared distances to the current means, from scratch."""


class VectorGeometry:
    def __init__(self, data: VectorDataset):
        self.X = data.points
        self.weights = data.weights
        self.n = data.n
        self.means = np.zeros((0, data.d))

    def distances(self, i):
        diff = self.means - self.X[i]
        return self.weights[i] * np.einsum("ij,ij->i", diff, diff)

    def point_to_mean_sq(self, i, c):
        diff = self.X[i] - self.means[c]
        return float(self.weights[i] * diff @ diff)

    def note_move(self, i, src, dst, src_emptied):
        if dst == NEW:
            self.means = np.vstack([self.means, self.X[i]])
        if src_emptied:
            self.means = np.delete(self.means, src, axis=0)

    def update_means(self, p):
        w = self.weights
        tot = np.bincount(p.assign, weights=w, minlength=p.k)
        sums = np.zeros((p.k, self.X.shape[1]))
        np.add.at(sums, p.assign, w[:, None] * self.X)
        self.means = sums / tot[:, None]

    def fit(self, p):
        diff = self.X - self.means[p.assign]
        return float(np.sum(self.weights * np.einsum("ij,ij->i", diff, diff)))


@dataclass
class SolverConfig:
    params: PYParams
    max_sweeps: int = 100
    order: str = FIXED
    restarts: int = 1
    seed: int = 0
    allow_new: bool = True

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise InvalidInput("max_sweeps must be >= 1")
        if self.restarts < 1:
            raise InvalidInput("restarts must be >= 1")
        if self.order not in (FIXED, SHUFFLED):
            raise InvalidInput(f"unknown point order {self.order!r}")

    def as_dict(self) -> dict:
        return {
            **self.params.as_dict(),
            "max_sweeps": self.max_sweeps,
            "order": self.order,
            "restarts": self.restarts,
            "seed": self.seed,
            "allow_new": self.allow_new,
        }


@dataclass
class RunResult:
    """Outcome of one solver call (best restart).

    ``objective_trace[0]`` is the objective at initialization; entry ``s`` is
    the objective after sweep ``s`` and its mean update. ``phase_trace``
    interleaves the values after every assignment and mean-update phase.
    """

    partition: Partition
    objective_trace: list[float]
    k_trace: list[int]
    sweeps_used: int
    converged: bool
    seed: int
    phase_trace: list[float] = field(default_factory=list)
    incremental_trace: list[float] = field(default_factory=list)
    forbidden_trace: list[int] = field(default_factory=list)
    restart_objectives: list[float] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    @property
    def k(self) -> int:
        return self.partition.k

    def as_dict(self) -> dict:
        return {
            "assignments": self.partition.assign.tolist(),
            "k": self.partition.k,
            "sizes": list(self.partition.sizes),
            "objective": self.objective,
            "objective_trace": self.objective_trace,
            "k_trace": self.k_trace,
            "phase_trace": self.phase_trace,
            "incremental_trace": self.incremental_trace,
            "forbidden_new_trace": self.forbidden_trace,
            "sweeps_used": self.sweeps_used,
            "converged": self.converged,
            "seed": self.seed,
            "restart_objectives": self.restart_objectives,
            **self.extra,
        }


def regularized_distance(i, current, candidate, geom, p: Partition, params: PYParams) -> float:
    """Regularized distance used to pick the destination of point ``i``.

    Differences between candidates equal differences in the full objective
    (fit + lambda * regularizer) with means held fixed;
    staying put is the reference point.
    """
    nc, k, lam = p.sizes[current], p.k, params.lam
    a, t = params.alpha, params.theta
    if candidate == current:
        return 0.0 if nc == 1 else geom.point_to_mean_sq(i, current)
    if candidate == NEW:
        if nc == 1:
            return FORBIDDEN
        return lam * math.log((nc - 1 - t) / (a + k * t))
    ncp = p.sizes[candidate]
    num = a + (k - 1) * t if nc == 1 else nc - 1 - t
    return geom.point_to_mean_sq(i, candidate) + lam * math.log(num / (ncp - t))


def objective(geom, p: Partition, params: PYParams) -> float:
    """fit + lambda * r(Z) with the geometry's current means, from scratch."""
    reg = -log_eppf(p, params)
    return geom.fit(p) + (params.lam * reg if params.lam else 0.0)


def sweep(geom, p: Partition, params: PYParams, order, *, state: EppfState | None = None,
          allow_new: bool = True, stats: dict | None = None):
    """One assignment pass over ``order``. Returns ``(p, moved_count)``.

    ``stats`` (if given) receives ``delta``, the accumulated exact objective
    change, and ``forbidden``, the number of points for which opening a new
    cluster was ruled out.
    """
    if state is None:
        state = EppfState(p, params)
    lam, a, t = params.lam, params.alpha, params.theta
    moved = 0
    forbidden = 0
    delta_total = 0.0
    sizes = p.sizes
    for i in order:
        i = int(i)
        c = int(p.assign[i])
        k = p.k
        nc = sizes[c]
        dist = geom.distances(i)
        stay_true = float(dist[c])
        if nc == 1:
            if k == 1:
                forbidden += allow_new
                continue
            num = math.log(a + (k - 1) * t)
            stay = 0.0
        else:
            num = math.log(nc - 1 - t)
            stay = stay_true
        if lam:
            cand = dist + lam * (num - np.log(np.asarray(sizes, dtype=np.float64) - t))
        else:
            cand = dist.copy()
        cand[c] = np.inf
        best = int(np.argmin(cand)) if k > 1 else -1
        best_val = cand[best] if best >= 0 else np.inf
        if allow_new:
            if nc == 1:
                forbidden += 1
            else:
                new_val = lam * (num - math.log(a + k * t)) if lam else 0.0
                if new_val < best_val:
                    best, best_val = NEW, new_val
        tol = _TIE_RTOL * max(1.0, abs(stay), abs(best_val))
        if best_val >= stay - tol:
            continue
        fit_delta = (0.0 if best == NEW else float(dist[best])) - stay_true
        emptied = nc == 1
        reg_delta = state.move_point(i, best)
        geom.note_move(i, c, best, emptied)
        delta_total += fit_delta + (lam * reg_delta if lam else 0.0)
        moved += 1
    if stats is not None:
        stats["delta"] = delta_total
        stats["forbidden"] = forbidden
    return p, moved


def _orders(n, config: SolverConfig):
    seqs = np.random.SeedSequence(config.seed).spawn(config.restarts)
    for r, ss in enumerate(seqs):
        rng = np.random.default_rng(ss) if config.order == SHUFFLED else None
        yield r, rng


def descend(geom, p: Partition, config: SolverConfig, rng=None, *, track=None) -> RunResult:
    """Alternate sweeps and mean updates from partition ``p`` until no point moves.

    ``track(p)``, if given, is evaluated at initialization and after every
    sweep; its values land in ``extra["tracked_trace"]``.
    """
    params = config.params
    geom.update_means(p)
    state = EppfState(p, params)
    obj = objective(geom, p, params)
    obj_trace, k_trace, phase, incr, forb = [obj], [p.k], [obj], [], []
    tracked = [track(p)] if track is not None else None
    converged = False
    sweeps = 0
    order = np.arange(p.n)
    for _ in range(config.max_sweeps):
        if rng is not None:
            order = rng.permutation(p.n)
        stats: dict = {}
        _, moved = sweep(geom, p, params, order, state=state, allow_new=config.allow_new, stats=stats)
        sweeps += 1
        incr.append(obj + stats["delta"])
        phase.append(objective(geom, p, params))
        geom.update_means(p)
        state.resync()
        obj = objective(geom, p, params)
        phase.append(obj)
        obj_trace.append(obj)
        k_trace.append(p.k)
        forb.append(stats["forbidden"])
        if track is not None:
            tracked.append(track(p))
        if moved == 0:
            converged = True
            break
    res = RunResult(
        partition=p,
        objective_trace=obj_trace,
        k_trace=k_trace,
        sweeps_used=sweeps,
        converged=converged,
        seed=config.seed,
        phase_trace=phase,
        incremental_trace=incr,
        forbidden_trace=forb,
    )
    if tracked is not None:
        res.extra["tracked_trace"] = tracked
    return res


def run(geom, config: SolverConfig, init: Partition | None = None, *, track=None) -> RunResult:
    """Solve from the single-cluster start (or ``init``); best of ``config.restarts`` runs."""
    best = None
    finals = []
    for r, rng in _orders(geom.n, config):
        p = single_cluster(geom.n) if init is None else init.copy()
        res = descend(geom, p, config, rng, track=track)
        finals.append(res.objective)
        if best is None or res.objective < best.objective:
            best = res
            best.extra["restart"] = r
    best.restart_objectives = finals
    # leave the geometry's means consistent with the returned partition
    geom.update_means(best.partition)
    return best


def power_law_means(data: VectorDataset, config: SolverConfig) -> RunResult:
    """Vector-space entry point."""
    res = run(VectorGeometry(data), config)
    res.extra["mode"] = "vectors"
    return res
