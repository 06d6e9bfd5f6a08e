import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import normalized_mutual_info_score

from plcuts.errors import InvalidInput, MonotonicityViolation
from plcuts.metrics import audit_objective, nmi, size_histogram
from plcuts.partition import PYParams, VectorDataset, partition_from_assignments
from plcuts.solver import SolverConfig, power_law_means

labels_pair = st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 6), min_size=n, max_size=n),
                        st.lists(st.integers(0, 6), min_size=n, max_size=n)))


def test_nmi_examples():
    a = partition_from_assignments([0, 0, 1, 2, 2])
    assert nmi(a, a) == 1.0
    assert nmi([0] * 5, a) == 0.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)
    assert nmi([0, 0, 0], [4, 4, 4]) == 1.0


def test_nmi_length_mismatch():
    with pytest.raises(InvalidInput):
        nmi([0, 1], [0, 1, 1])


@settings(max_examples=500, deadline=None)
@given(labels_pair)
def test_nmi_against_sklearn(pair):
    a, b = pair
    want = normalized_mutual_info_score(a, b, average_method="geometric")
    assert nmi(a, b) == pytest.approx(want, abs=1e-10)


@settings(max_examples=2000, deadline=None)
@given(labels_pair, st.permutations(range(7)))
def test_nmi_symmetric_bounded_permutation_invariant(pair, perm):
    a, b = pair
    v = nmi(a, b)
    assert v == nmi(b, a)
    assert 0.0 <= v <= 1.0
    assert nmi([perm[x] for x in a], b) == pytest.approx(v, abs=1e-12)


def test_size_histogram():
    p = partition_from_assignments([0, 1, 1, 1, 2, 2, 2, 2, 2])
    ordered, pairs = size_histogram(p)
    assert ordered == [5, 3, 1]
    assert pairs == [(1, 5), (2, 3), (3, 1)]
    flat, _ = size_histogram(partition_from_assignments(np.repeat(np.arange(4), 3)))
    assert flat == [3, 3, 3, 3]


def _run():
    X = np.random.default_rng(0).normal(size=(40, 2))
    prm = PYParams(0.5, 0.2, 0.3)
    return power_law_means(VectorDataset(X), SolverConfig(prm)), X, prm


def test_audit_valid_run():
    res, X, prm = _run()
    from plcuts.eppf import regularizer
    from plcuts.solver import VectorGeometry

    def recompute(p):
        g = VectorGeometry(VectorDataset(X))
        g.update_means(p)
        return g.fit(p) + prm.lam * regularizer(p, prm)

    rep = audit_objective(res, recompute=recompute)
    assert rep.ok and rep.max_discrepancy < 1e-7 and rep.final_discrepancy < 1e-7
    rep2 = audit_objective(res.as_dict(), recompute=recompute)
    assert rep2.as_dict()["ok"]


def test_audit_flags_corruption():
    res, *_ = _run()
    d = res.as_dict()
    d["phase_trace"] = list(d["phase_trace"])
    d["phase_trace"][-1] = d["phase_trace"][-2] + 1.0
    rep = audit_objective(d)
    assert not rep.monotone and not rep.ok
    with pytest.raises(MonotonicityViolation):
        audit_objective(d, strict=True)


def test_audit_empty_trace():
    with pytest.raises(InvalidInput):
        audit_objective({"objective_trace": [], "phase_trace": []})
