"""Clustering with a Pitman-Yor power-law prior on cluster sizes, for vectors and graph cuts."""

from .eppf import log_eppf, move_delta, regularizer
from .errors import DegenerateCluster, DomainError, InvalidInput, MonotonicityViolation, ParseError, PlcutsError
from .graphcuts import NCUT, RASSOC, RCUT, build_kernel, cut_objective, power_law_cut, psd_shift
from .metrics import audit_objective, nmi, size_histogram
from .partition import NEW, Partition, PYParams, VectorDataset, WeightedGraph, partition_from_assignments
from .solver import RunResult, SolverConfig, power_law_means

__version__ = "0.1.0"
