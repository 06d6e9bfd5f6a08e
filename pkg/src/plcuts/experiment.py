"""Experiment configs, parameter sweeps with validation-based selection, result records."""

from __future__ import annotations

import dataclasses
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import baselines as bl
from .datagen import gaussian_similarity_graph
from .errors import InvalidInput, PlcutsError
from .graphcuts import AUTO, KINDS, NCUT, build_kernel, cut_objective, power_law_cut
from .io import load_csv_vectors, load_edge_list, load_labels, rank_size_tsv, write_json, _atomic_write
from .metrics import NMI_CONVENTION, nmi, size_histogram
from .partition import Partition, PYParams, WeightedGraph, partition_from_assignments
from .solver import FIXED, SolverConfig, power_law_means

SELECTION_RULE = "min |k - k_true| on validation split; ties -> higher validation NMI; then grid order"


def fix_isolated(g: WeightedGraph, policy: str = "error") -> WeightedGraph:
    """Apply the isolated-node policy: leave as is ("error") or add unit self-loops."""
    if policy == "error":
        return g
    if policy != "self-loop":
        raise InvalidInput(f"unknown isolated-node policy {policy!r}")
    iso = g.degrees <= 0
    if not iso.any():
        return g
    return WeightedGraph(g.adjacency + sp.diags(iso.astype(np.float64)), symmetrize=False)


@dataclass
class ExperimentConfig:
    input: str
    output: str
    format: str | None = None
    labels: str | None = None
    has_labels: bool = False
    normalize: bool = False
    mode: str | None = None
    sigma: object = "auto"
    sparsify: str = "none"
    sparsify_param: float | None = None
    objective: str = NCUT
    rho: object = AUTO
    isolated: str = "error"
    lam: list = field(default_factory=lambda: [1.0])
    alpha: list = field(default_factory=lambda: [1.0])
    theta: list = field(default_factory=lambda: [0.5])
    max_sweeps: int = 100
    order: str = FIXED
    restarts: int = 1
    seed: int = 0
    split: float | None = None
    baselines: list = field(default_factory=list)
    pyp_lambda: list = field(default_factory=lambda: [1.0])
    pyp_theta: list = field(default_factory=lambda: [0.0])
    pyp_squared: bool = False
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        for key in ("lam", "alpha", "theta", "pyp_lambda", "pyp_theta"):
            if key in d and not isinstance(d[key], list):
                d[key] = [d[key]]
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self) -> None:
        if self.format is None:
            self.format = "csv" if str(self.input).lower().endswith(".csv") else "edges"
        if self.format not in ("edges", "csv"):
            raise InvalidInput(f"unknown input format {self.format!r}")
        if self.mode is None:
            self.mode = "graph" if self.format == "edges" else "vectors"
        if self.mode not in ("graph", "vectors"):
            raise InvalidInput(f"unknown mode {self.mode!r}")
        if self.format == "edges" and self.mode == "vectors":
            raise InvalidInput("an edge list cannot be clustered in vector mode")
        if self.objective not in KINDS:
            raise InvalidInput(f"unknown objective {self.objective!r}")
        for key in ("lam", "alpha", "theta"):
            if not getattr(self, key):
                raise InvalidInput(f"grid {key!r} is empty")
        for p in (self.input, self.labels):
            if p is not None and not Path(p).exists():
                raise InvalidInput(f"file not found: {p}")
        if self.split is not None and not 0.0 < self.split < 1.0:
            raise InvalidInput("split must lie in (0, 1)")
        for b in self.baselines:
            if b not in ("kkm", "kmeans", "pyp"):
                raise InvalidInput(f"unknown baseline {b!r}")
        SolverConfig(PYParams(self.alpha[0], self.theta[0], self.lam[0]), self.max_sweeps, self.order,
                     self.restarts, self.seed)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def grid(self) -> list[PYParams]:
        return [PYParams(a, t, l) for l, a, t in itertools.product(self.lam, self.alpha, self.theta)]


@dataclass
class Problem:
    """A loaded dataset in the form the solver needs, plus optional ground truth."""

    mode: str
    graph: WeightedGraph | None = None
    data: object = None
    truth: Partition | None = None

    @property
    def n(self) -> int:
        return self.graph.n if self.mode == "graph" else self.data.n

    def subset(self, idx, isolated: str) -> "Problem":
        idx = np.sort(np.asarray(idx))
        truth = None if self.truth is None else partition_from_assignments(self.truth.assign[idx])
        if self.mode == "graph":
            return Problem("graph", graph=fix_isolated(self.graph.subgraph(idx), isolated), truth=truth)
        return Problem("vectors", data=self.data.subset(idx), truth=truth)


def load_problem(cfg: ExperimentConfig) -> Problem:
    if cfg.format == "edges":
        truth = load_labels(cfg.labels) if cfg.labels else None
        g = load_edge_list(cfg.input, n=None if truth is None else truth.n)
        if truth is not None and truth.n != g.n:
            raise InvalidInput(f"labels cover {truth.n} nodes, graph has {g.n}")
        return Problem("graph", graph=fix_isolated(g, cfg.isolated), truth=truth)
    data, truth = load_csv_vectors(cfg.input, cfg.has_labels, cfg.normalize)
    if cfg.labels:
        truth = load_labels(cfg.labels)
    if cfg.mode == "graph":
        g = gaussian_similarity_graph(data, cfg.sigma, cfg.sparsify, cfg.sparsify_param)
        return Problem("graph", graph=fix_isolated(g, cfg.isolated), truth=truth)
    return Problem("vectors", data=data, truth=truth)


def solve(problem: Problem, params: PYParams, cfg: ExperimentConfig):
    config = SolverConfig(params, cfg.max_sweeps, cfg.order, cfg.restarts, cfg.seed)
    if problem.mode == "graph":
        return power_law_cut(problem.graph, cfg.objective, params, config, rho=cfg.rho)
    return power_law_means(problem.data, config)


def _cell(args):
    problem, params, cfg = args
    try:
        res = solve(problem, params, cfg)
    except PlcutsError as exc:
        raise type(exc)(f"grid cell {params.as_dict()}: {exc}") from exc
    out = {"params": params.as_dict(), "k": res.k, "objective": res.objective, "sweeps_used": res.sweeps_used,
           "converged": res.converged}
    if problem.truth is not None:
        out["nmi"] = nmi(res.partition, problem.truth)
    return out


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def select_cell(cells: list[dict], k_true: int) -> int:
    """Index of the cell with k nearest the truth; ties -> higher NMI, then earlier."""
    return min(range(len(cells)), key=lambda i: (abs(cells[i]["k"] - k_true), -cells[i].get("nmi", 0.0), i))


def _pyp_cell(args):
    data, truth, lam, theta, cfg = args
    res = bl.pyp_means(data, lam, theta, seed=cfg.seed, squared=cfg.pyp_squared)
    out = {"params": {"lambda": lam, "theta": theta}, "k": res.k}
    if truth is not None:
        out["nmi"] = nmi(res.partition, truth)
    return out


def run_baselines(problem: Problem, cfg: ExperimentConfig, validation: Problem | None) -> dict:
    out = {}
    truth = problem.truth
    for name in cfg.baselines:
        if name in ("kkm", "kmeans") and truth is None:
            raise InvalidInput(f"baseline {name!r} needs ground-truth labels to fix k")
        if name == "kkm":
            if problem.mode != "graph":
                raise InvalidInput("kkm baseline needs graph mode")
            kp = build_kernel(problem.graph, cfg.objective, cfg.rho)
            res = bl.weighted_kernel_kmeans(kp, truth.k, init=cfg.seed, max_sweeps=cfg.max_sweeps)
            res.extra["rho"] = kp.rho
            res.extra["cut_objective"] = cut_objective(problem.graph, res.partition, cfg.objective)
        elif name == "kmeans":
            if problem.mode != "vectors":
                raise InvalidInput("kmeans baseline needs vector mode")
            res = bl.kmeans(problem.data, truth.k, init=cfg.seed)
        else:
            if problem.mode != "vectors":
                raise InvalidInput("pyp baseline needs vector mode")
            sel = validation if validation is not None else problem
            grid = list(itertools.product(cfg.pyp_lambda, cfg.pyp_theta))
            cells = _map(_pyp_cell, [(sel.data, sel.truth, l, t, cfg) for l, t in grid], cfg.workers)
            chosen = 0 if len(cells) == 1 else select_cell(cells, sel.truth.k)
            lam, theta = grid[chosen]
            res = bl.pyp_means(problem.data, lam, theta, seed=cfg.seed, squared=cfg.pyp_squared)
            res.extra["selection"] = {"cells": cells, "chosen": chosen}
        rec = res.as_dict()
        if truth is not None:
            rec["nmi"] = nmi(res.partition, truth)
        out[name] = rec
    return out


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Load data, optionally split and validate a parameter grid, run, and write the JSON record."""
    problem = load_problem(cfg)
    grid = cfg.grid()
    validation = None
    target = problem
    if cfg.split is not None:
        if problem.truth is None:
            raise InvalidInput("a validation split needs ground-truth labels")
        perm = np.random.default_rng(cfg.seed).permutation(problem.n)
        nval = int(round(cfg.split * problem.n))
        validation = problem.subset(perm[:nval], cfg.isolated)
        target = problem.subset(perm[nval:], cfg.isolated)
    selection = None
    if len(grid) > 1:
        sel_problem = validation if validation is not None else target
        if sel_problem.truth is None:
            raise InvalidInput("selecting among several grid cells needs ground-truth labels")
        cells = _map(_cell, [(sel_problem, prm, cfg) for prm in grid], cfg.workers)
        chosen = select_cell(cells, sel_problem.truth.k)
        selection = {"rule": SELECTION_RULE, "on": "validation" if validation is not None else "full",
                     "cells": cells, "chosen": chosen}
        if write:
            cell_dir = Path(str(cfg.output) + ".cells")
            for i, c in enumerate(cells):
                _atomic_write(cell_dir / f"cell_{i:03d}.json", json.dumps(c, indent=1) + "\n")
        params = grid[chosen]
    else:
        params = grid[0]
    res = solve(target, params, cfg)
    result = res.as_dict()
    ordered, pairs = size_histogram(res.partition)
    result["size_histogram"] = ordered
    if target.truth is not None:
        result["nmi"] = nmi(res.partition, target.truth)
        result["k_true"] = target.truth.k
    record = {
        "command": "sweep run",
        "config": cfg.as_dict(),
        "params": params.as_dict(),
        "selection": selection,
        "split": None if validation is None else {"validation": validation.n, "clustering": target.n},
        "result": result,
        "baselines": run_baselines(target, cfg, validation),
        "conventions": {"nmi": NMI_CONVENTION},
    }
    if write:
        write_json(record, cfg.output)
        _atomic_write(str(cfg.output) + ".ranksize.tsv", rank_size_tsv(pairs))
    return record
