"""Pitman-Yor exchangeable partition probability function, in log space.

The regularizer used by the solvers is ``r(Z) = -log_eppf(Z)``; ``move_delta``
gives the exact change in ``r`` for a single-point move in O(1).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .partition import NEW, Partition, PYParams

# Cost of a move the regularizer forbids (a singleton opening a new cluster).
FORBIDDEN = math.inf

_DIRECT_SUM_MAX = 64
RESYNC_EVERY = 10_000


def log_rising_factorial(x: float, m: int, a: float = 1.0) -> float:
    """ln of x (x + a) (x + 2a) ... (x + (m-1)a); zero when m == 0."""
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    if m == 0:
        return 0.0
    if a < 0:
        raise DomainError(f"increment must be nonnegative, got {a}")
    if x <= 0:
        raise DomainError(f"nonpositive factor {x} in rising factorial")
    if a == 0:
        return m * math.log(x)
    if m <= _DIRECT_SUM_MAX:
        return math.fsum(math.log(x + j * a) for j in range(m))
    r = x / a
    return m * math.log(a) + math.lgamma(r + m) - math.lgamma(r)


def _log_prod_sizes(sizes, theta: float) -> float:
    # sorted so the float sum depends only on the multiset of sizes
    s = np.sort(np.asarray(sizes, dtype=np.float64))
    if s.size == 0:
        return 0.0
    # sum_c ln[1 - theta]_{n_c - 1} = sum_c lgamma(n_c - theta) - k lgamma(1 - theta)
    return float(np.sum(gammaln(s - theta)) - s.size * gammaln(1.0 - theta))


def log_eppf_sizes(sizes, n: int, params: PYParams) -> float:
    k = len(sizes)
    return (
        log_rising_factorial(params.alpha + params.theta, k - 1, params.theta)
        - log_rising_factorial(params.alpha + 1.0, n - 1, 1.0)
        + _log_prod_sizes(sizes, params.theta)
    )


def log_eppf(p: Partition, params: PYParams) -> float:
    """Log-probability of the partition under the Pitman-Yor Chinese restaurant process."""
    return log_eppf_sizes(p.sizes, p.n, params)


def regularizer(p: Partition, params: PYParams) -> float:
    return -log_eppf(p, params)


def move_delta(params: PYParams, source_size: int, target_size: int, k: int) -> float:
    """Change in the regularizer when one point leaves a cluster of ``source_size``.

    ``target_size`` is the current size of the destination cluster, or ``NEW``.
    Returns ``FORBIDDEN`` for a singleton opening a new cluster.
    """
    a, t = params.alpha, params.theta
    if target_size == NEW:
        if source_size == 1:
            return FORBIDDEN
        return math.log((source_size - 1 - t) / (a + k * t))
    if source_size == 1:
        return math.log((a + (k - 1) * t) / (target_size - t))
    return math.log((source_size - 1 - t) / (target_size - t))


class EppfState:
    """Running log-EPPF bound to one partition; updated in O(1) per move."""

    def __init__(self, partition: Partition, params: PYParams):
        self.partition = partition
        self.params = params
        self._moves = 0
        self.resync()

    def resync(self) -> None:
        p, prm = self.partition, self.params
        self.log_num = log_rising_factorial(prm.alpha + prm.theta, p.k - 1, prm.theta)
        self.log_den = log_rising_factorial(prm.alpha + 1.0, p.n - 1, 1.0)
        self.log_prod = _log_prod_sizes(p.sizes, prm.theta)

    @property
    def value(self) -> float:
        return self.log_num - self.log_den + self.log_prod

    def delta(self, i: int, target: int) -> float:
        p = self.partition
        src = int(p.assign[i])
        if target == src:
            return 0.0
        tsize = NEW if target == NEW else p.sizes[target]
        return move_delta(self.params, p.sizes[src], tsize, p.k)

    def move_point(self, i: int, target: int) -> float:
        """Move point ``i`` and return the change in the regularizer."""
        p, prm = self.partition, self.params
        src = int(p.assign[i])
        if target == src:
            return 0.0
        ns, k, t = p.sizes[src], p.k, prm.theta
        d = self.delta(i, target)
        if d == FORBIDDEN:
            raise DomainError("a singleton cannot open a new cluster")
        if ns > 1:
            self.log_prod -= math.log(ns - 1 - t)
        else:
            self.log_num -= math.log(prm.alpha + (k - 1) * t)
        if target == NEW:
            self.log_num += math.log(prm.alpha + k * t)
        else:
            self.log_prod += math.log(p.sizes[target] - t)
        p.move_point(i, target)
        self._moves += 1
        if self._moves % RESYNC_EVERY == 0:
            self.resync()
        return d
