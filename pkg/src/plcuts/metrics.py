"""Clustering evaluation: NMI, cluster-size statistics, objective audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, MonotonicityViolation
from .partition import Partition

NMI_CONVENTION = "nmi_sqrt_natural_log"

# slack for float noise when checking that a trace never increases
MONOTONE_ATOL = 1e-9


def _labels(p) -> np.ndarray:
    return p.assign if isinstance(p, Partition) else np.asarray(p)


def _entropy(counts: np.ndarray, n: int) -> float:
    q = counts[counts > 0] / n
    return -math.fsum(q * np.log(q))


def nmi(a, b) -> float:
    """Mutual information over the geometric mean of entropies (natural log).

    Two single-cluster partitions score 1.
    """
    la, lb = _labels(a), _labels(b)
    if len(la) != len(lb):
        raise InvalidInput(f"partitions cover different point counts: {len(la)} vs {len(lb)}")
    n = len(la)
    if n == 0:
        raise InvalidInput("empty partitions")
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    ka, kb = ia.max() + 1, ib.max() + 1
    table = np.bincount(ia * kb + ib, minlength=ka * kb).reshape(ka, kb).astype(np.float64)
    ra, rb = table.sum(axis=1), table.sum(axis=0)
    ha, hb = _entropy(ra, n), _entropy(rb, n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = (ra[:, None] * rb[None, :])[nz] / (n * n)
    # fsum is exactly rounded, so swapping a and b cannot change the result
    mi = math.fsum(pij * np.log(pij / outer))
    return float(min(1.0, max(0.0, mi / np.sqrt(ha * hb))))


def size_histogram(p) -> tuple[list[int], list[tuple[int, int]]]:
    """Cluster sizes in descending order and their (rank, size) pairs."""
    sizes = p.sizes if isinstance(p, Partition) else list(p)
    ordered = sorted((int(s) for s in sizes), reverse=True)
    return ordered, [(r + 1, s) for r, s in enumerate(ordered)]


@dataclass
class AuditReport:
    monotone: bool
    violations: list[tuple[int, float, float]] = field(default_factory=list)
    max_discrepancy: float = 0.0
    final_recomputed: float | None = None
    final_discrepancy: float | None = None

    @property
    def ok(self) -> bool:
        return self.monotone and self.max_discrepancy < 1e-7 and (
            self.final_discrepancy is None or self.final_discrepancy < 1e-7)

    def as_dict(self) -> dict:
        return {
            "monotone": self.monotone,
            "violations": [list(v) for v in self.violations],
            "max_discrepancy": self.max_discrepancy,
            "final_recomputed": self.final_recomputed,
            "final_discrepancy": self.final_discrepancy,
            "ok": self.ok,
        }


def audit_objective(result, recompute=None, strict: bool = False) -> AuditReport:
    """Check a run's traces.

    Verifies that the phase trace never increases and compares the
    incrementally tracked objective with the from-scratch one after each
    assignment phase. ``recompute(partition)``, if given, recomputes the final
    objective independently. ``result`` may be a RunResult or its dict form.
    """
    d = result if isinstance(result, dict) else result.as_dict()
    trace = d.get("phase_trace") or d.get("objective_trace") or []
    if not trace:
        raise InvalidInput("cannot audit an empty objective trace")
    violations = []
    for s in range(1, len(trace)):
        if trace[s] > trace[s - 1] + MONOTONE_ATOL * max(1.0, abs(trace[s - 1])):
            violations.append((s, trace[s - 1], trace[s]))
    incr = d.get("incremental_trace") or []
    # phase_trace = [init, assign_1, update_1, assign_2, update_2, ...]
    assigned = d.get("phase_trace", [])[1::2]
    disc = max((abs(x - y) for x, y in zip(incr, assigned)), default=0.0)
    report = AuditReport(monotone=not violations, violations=violations, max_discrepancy=float(disc))
    if recompute is not None:
        part = result.partition if not isinstance(result, dict) else Partition(
            np.asarray(d["assignments"], dtype=np.int64), list(d["sizes"]))
        val = float(recompute(part))
        report.final_recomputed = val
        report.final_discrepancy = abs(val - d["objective"])
    if strict and violations:
        s, before, after = violations[0]
        raise MonotonicityViolation(f"objective rose at phase {s}: {before!r} -> {after!r}")
    return report
