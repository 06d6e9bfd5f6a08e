import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import eppf_direct, set_partitions, sizes_of
from plcuts.eppf import (
    FORBIDDEN,
    EppfState,
    log_eppf,
    log_eppf_sizes,
    log_rising_factorial,
    move_delta,
    regularizer,
)
from plcuts.errors import DomainError
from plcuts.partition import NEW, PYParams, partition_from_assignments, single_cluster

params_st = st.tuples(st.floats(0.0, 0.95), st.floats(0.05, 5.0)).map(
    lambda tv: PYParams(alpha=tv[1] - tv[0] * 0.9, theta=tv[0], lam=1.0))


def test_rising_factorial_examples():
    assert log_rising_factorial(2.0, 0, 0.5) == 0.0
    assert log_rising_factorial(1.5, 1, 0.5) == pytest.approx(math.log(1.5), abs=1e-15)
    assert log_rising_factorial(1.0, 3, 1.0) == pytest.approx(math.log(6.0), abs=1e-14)


@pytest.mark.parametrize("x, m, a", [(0.3, 100, 0.7), (2.5, 500, 1.0), (1e-3, 80, 0.2), (4.0, 65, 0.0)])
def test_rising_factorial_large_m(x, m, a):
    direct = math.fsum(math.log(x + j * a) for j in range(m))
    assert log_rising_factorial(x, m, a) == pytest.approx(direct, rel=1e-12)


def test_rising_factorial_domain():
    with pytest.raises(DomainError):
        log_rising_factorial(0.0, 2, 1.0)
    with pytest.raises(DomainError):
        log_rising_factorial(-1.0, 1, 1.0)


def test_eppf_examples():
    prm = PYParams(1.0, 0.5)
    assert log_eppf(single_cluster(1), PYParams(0.3, 0.7)) == 0.0
    assert log_eppf(partition_from_assignments([0, 0, 1]), prm) == pytest.approx(math.log(0.125), abs=1e-14)
    assert log_eppf(single_cluster(2), PYParams(1.0, 0.0)) == pytest.approx(math.log(0.5), abs=1e-15)
    assert regularizer(single_cluster(2), PYParams(1.0, 0.0)) == pytest.approx(math.log(2.0), abs=1e-15)


def test_eppf_n3_normalization_by_hand():
    prm = PYParams(1.0, 0.5)
    total = sum(math.exp(log_eppf(partition_from_assignments(z), prm)) for z in set_partitions(3))
    assert total == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(params_st, st.integers(1, 6))
def test_eppf_normalizes(prm, n):
    total = math.fsum(math.exp(log_eppf_sizes(sizes_of(z), n, prm)) for z in set_partitions(n))
    assert total == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(params_st, st.lists(st.integers(0, 5), min_size=1, max_size=9))
def test_eppf_matches_direct_product(prm, labels):
    p = partition_from_assignments(labels)
    assert math.exp(log_eppf(p, prm)) == pytest.approx(eppf_direct(p.sizes, prm.alpha, prm.theta), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 10.0), st.lists(st.integers(0, 6), min_size=1, max_size=12))
def test_crp_closed_form(alpha, labels):
    p = partition_from_assignments(labels)
    n, k = p.n, p.k
    closed = (k - 1) * math.log(alpha) + sum(math.lgamma(s) for s in p.sizes) - sum(
        math.log(alpha + 1 + j) for j in range(n - 1))
    assert log_eppf(p, PYParams(alpha, 0.0)) == pytest.approx(closed, abs=1e-10)


def test_move_delta_examples():
    prm = PYParams(1.0, 0.5)
    assert move_delta(prm, 1, NEW, 3) == FORBIDDEN
    assert move_delta(prm, 3, 2, 2) == pytest.approx(0.0, abs=1e-15)
    assert move_delta(prm, 4, NEW, 2) == pytest.approx(math.log(2.5 / 2.0))
    assert move_delta(prm, 1, 3, 2) == pytest.approx(math.log(1.5 / 2.5))


def _random_state(rng, n_max=15):
    n = int(rng.integers(1, n_max))
    labels = rng.integers(0, max(1, n // 2), size=n)
    return partition_from_assignments(labels)


def test_move_delta_matches_from_scratch(rng):
    for _ in range(2000):
        prm = PYParams(float(rng.uniform(0.05, 3.0)), float(rng.uniform(0.0, 0.95)))
        p = _random_state(rng)
        i = int(rng.integers(p.n))
        src = int(p.assign[i])
        target = int(rng.integers(-1, p.k))
        if target == src:
            continue
        tsize = NEW if target == NEW else p.sizes[target]
        d = move_delta(prm, p.sizes[src], tsize, p.k)
        if p.sizes[src] == 1 and target == NEW:
            assert d == FORBIDDEN
            continue
        before = log_eppf(p, prm)
        after = log_eppf(p.copy().move_point(i, target), prm)
        assert d == pytest.approx(-(after - before), abs=1e-9)


def test_state_tracks_long_move_sequence(rng):
    prm = PYParams(0.7, 0.3)
    p = partition_from_assignments(rng.integers(0, 8, size=60))
    st_ = EppfState(p, prm)
    reg = -st_.value
    for _ in range(25_000):
        i = int(rng.integers(p.n))
        target = int(rng.integers(-1, p.k))
        if target == NEW and p.sizes[p.assign[i]] == 1:
            continue
        reg += st_.move_point(i, target)
    assert -st_.value == pytest.approx(regularizer(p, prm), abs=1e-9)
    assert reg == pytest.approx(regularizer(p, prm), abs=1e-8)


def test_state_refuses_forbidden_move():
    p = partition_from_assignments([0, 1])
    with pytest.raises(DomainError):
        EppfState(p, PYParams()).move_point(0, NEW)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=10), st.randoms(use_true_random=False))
def test_exchangeable(labels, rnd):
    prm = PYParams(1.3, 0.4)
    p = partition_from_assignments(labels)
    perm = list(range(len(labels)))
    rnd.shuffle(perm)
    relabel = {c: (c * 7 + 3) % 11 for c in set(labels)}
    q = partition_from_assignments([relabel[labels[j]] for j in perm])
    assert log_eppf(q, prm) == log_eppf(p, prm)


def test_large_n_is_finite():
    prm = PYParams(1.0, 0.5)
    val = log_eppf(partition_from_assignments(np.arange(100_000) % 37), prm)
    assert np.isfinite(val) and val < 0
