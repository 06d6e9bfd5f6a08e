"""Command-line entry point: ``plcuts <command> <subcommand> [flags]``.

Every command writes one JSON record (to ``--out`` or stdout) that echoes all
flag values, defaults included.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines as bl
from .datagen import NONE, SbmSpec, gaussian_similarity_graph, pycrp_sbm, sample_power_law_blobs
from .eppf import regularizer
from .errors import InvalidInput, PlcutsError
from .experiment import ExperimentConfig, fix_isolated, run_experiment
from .graphcuts import AUTO, KINDS, NCUT, build_kernel, cut_objective, kernel_kmeans_objective, power_law_cut
from .io import (
    _atomic_write,
    _json_default,
    load_csv_vectors,
    load_edge_list,
    load_labels,
    rank_size_tsv,
    read_json,
    save_csv_vectors,
    save_edge_list,
    save_labels,
    write_json,
)
from .metrics import NMI_CONVENTION, audit_objective, nmi, size_histogram
from .partition import Partition, PYParams, partition_from_assignments
from .solver import FIXED, SHUFFLED, SolverConfig, VectorGeometry, power_law_means


def _rho(s: str):
    return s if s == AUTO else float(s)


def _sigma(s: str):
    return s if s == "auto" else float(s)


def _emit(record: dict, out) -> None:
    if out:
        write_json(record, out)
    else:
        json.dump(record, sys.stdout, indent=1, default=_json_default)
        sys.stdout.write("\n")


def _args_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _side_outputs(args, res, truth: Partition | None = None) -> None:
    """Rank-size TSV, label file and figures next to the JSON record."""
    ordered, pairs = size_histogram(res.partition)
    tsv = args.rank_size or (str(args.out) + ".ranksize.tsv" if args.out else None)
    if tsv:
        _atomic_write(tsv, rank_size_tsv(pairs))
    if getattr(args, "out_labels", None):
        save_labels(res.partition, args.out_labels)
    if getattr(args, "figures", None):
        from . import plotting

        stem = Path(args.out).stem if args.out else "run"
        ref = None if truth is None else truth.sizes
        plotting.rank_size_plot(ordered, Path(args.figures) / f"{stem}_ranksize.png", reference=ref)
        plotting.trace_plot(res.objective_trace, res.k_trace, Path(args.figures) / f"{stem}_trace.png")


def _result_record(command: str, args, res, truth: Partition | None) -> dict:
    result = res.as_dict()
    result["size_histogram"] = size_histogram(res.partition)[0]
    if truth is not None:
        result["nmi"] = nmi(res.partition, truth)
        result["k_true"] = truth.k
    return {"command": command, "args": _args_dict(args), "result": result, "conventions": {"nmi": NMI_CONVENTION}}


def _load_graph(args):
    truth = load_labels(args.labels) if args.labels else None
    g = load_edge_list(args.input, n=None if truth is None else truth.n)
    if truth is not None and truth.n != g.n:
        raise InvalidInput(f"labels cover {truth.n} nodes, graph has {g.n}")
    return fix_isolated(g, args.isolated), truth


def _load_vectors(args):
    data, truth = load_csv_vectors(args.input, args.has_labels, args.normalize)
    if getattr(args, "labels", None):
        truth = load_labels(args.labels)
    return data, truth


def _solver_config(args) -> SolverConfig:
    params = PYParams(args.alpha, args.theta, args.lam)
    return SolverConfig(params, args.max_sweeps, args.order, args.restarts, args.seed)


# ---- synth -----------------------------------------------------------------

def cmd_synth_sbm(args) -> None:
    spec = SbmSpec(args.n, args.alpha, args.theta, (args.diag_mean, args.diag_var),
                   (args.offdiag_mean, args.offdiag_var), args.seed)
    g, labels = pycrp_sbm(spec)
    save_edge_list(g, args.out_edges)
    save_labels(labels, args.out_labels)
    _emit({"command": "synth pycrp-sbm", "args": _args_dict(args), "spec": spec.as_dict(), "k": labels.k,
           "sizes": sorted(labels.sizes, reverse=True), "edges": g.nnz // 2,
           "isolated": int(np.sum(g.degrees == 0))}, args.out)


def cmd_synth_blobs(args) -> None:
    data, labels = sample_power_law_blobs(args.n, args.d, args.alpha, args.theta, args.blob_std, seed=args.seed)
    save_csv_vectors(data, args.out_csv, labels)
    _emit({"command": "synth blobs", "args": _args_dict(args), "k": labels.k,
           "sizes": sorted(labels.sizes, reverse=True)}, args.out)


# ---- graph -----------------------------------------------------------------

def cmd_graph_from_vectors(args) -> None:
    data, _ = load_csv_vectors(args.input, args.has_labels, args.normalize)
    g = gaussian_similarity_graph(data, args.sigma, args.sparsify, args.param)
    save_edge_list(g, args.out_edges)
    _emit({"command": "graph from-vectors", "args": _args_dict(args), "n": g.n, "edges": g.nnz // 2}, args.out)


# ---- cluster ---------------------------------------------------------------

def cmd_cluster_graph(args) -> None:
    g, truth = _load_graph(args)
    config = _solver_config(args)
    res = power_law_cut(g, args.objective, config.params, config, rho=args.rho)
    _emit(_result_record("cluster graph", args, res, truth), args.out)
    _side_outputs(args, res, truth)


def cmd_cluster_vectors(args) -> None:
    data, truth = _load_vectors(args)
    res = power_law_means(data, _solver_config(args))
    _emit(_result_record("cluster vectors", args, res, truth), args.out)
    _side_outputs(args, res, truth)


# ---- baselines -------------------------------------------------------------

def _k_for(args, truth):
    if args.k is not None:
        return args.k
    if truth is None:
        raise InvalidInput("give --k or --labels so k can be taken from the ground truth")
    return truth.k


def cmd_baseline_kkm(args) -> None:
    g, truth = _load_graph(args)
    kp = build_kernel(g, args.objective, args.rho)
    res = bl.weighted_kernel_kmeans(kp, _k_for(args, truth), init=args.seed, max_sweeps=args.max_sweeps)
    res.extra["rho"] = kp.rho
    res.extra["cut_objective"] = cut_objective(g, res.partition, args.objective)
    _emit(_result_record("baseline kkm", args, res, truth), args.out)
    _side_outputs(args, res, truth)


def cmd_baseline_kmeans(args) -> None:
    data, truth = _load_vectors(args)
    res = bl.kmeans(data, _k_for(args, truth), init=args.seed, max_iters=args.max_iters)
    _emit(_result_record("baseline kmeans", args, res, truth), args.out)
    _side_outputs(args, res, truth)


def cmd_baseline_pyp(args) -> None:
    data, truth = _load_vectors(args)
    res = bl.pyp_means(data, args.lam, args.theta, seed=args.seed, max_iters=args.max_iters, squared=args.squared)
    _emit(_result_record("baseline pyp", args, res, truth), args.out)
    _side_outputs(args, res, truth)


# ---- eval / sweep / audit --------------------------------------------------

def load_assignments(path) -> Partition:
    """Labels from a label file or from a result JSON written by this tool."""
    if str(path).endswith(".json"):
        d = read_json(path)
        d = d.get("result", d)
        if "assignments" not in d:
            raise InvalidInput(f"{path}: no assignments in JSON record")
        return partition_from_assignments(d["assignments"])
    return load_labels(path)


def cmd_eval_nmi(args) -> None:
    a, b = load_assignments(args.a), load_assignments(args.b)
    _emit({"command": "eval nmi", "args": _args_dict(args), "nmi": nmi(a, b), "k_a": a.k, "k_b": b.k,
           "conventions": {"nmi": NMI_CONVENTION}}, args.out)


def cmd_sweep_run(args) -> None:
    with open(args.config) as fh:
        raw = json.load(fh)
    for key in ("output", "workers"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    cfg = ExperimentConfig.from_dict(raw)
    record = run_experiment(cfg)
    if args.figures:
        from . import plotting

        res = record["result"]
        stem = Path(cfg.output).stem
        plotting.rank_size_plot(res["size_histogram"], Path(args.figures) / f"{stem}_ranksize.png")
        plotting.trace_plot(res["objective_trace"], res["k_trace"], Path(args.figures) / f"{stem}_trace.png")
    print(cfg.output)


def _recompute(record: dict, args):
    """Rebuild the objective of the recorded partition from the input data."""
    rec_args = record.get("args") or {}
    result = record.get("result", record)
    lam = rec_args.get("lam", 0.0)
    params = PYParams(rec_args.get("alpha", 1.0), rec_args.get("theta", 0.0), lam)

    def reg(p):
        return lam * regularizer(p, params) if lam else 0.0

    if result.get("mode") == "graph" or result.get("baseline") == "weighted_kernel_kmeans":
        g = fix_isolated(load_edge_list(args.input, n=len(result["assignments"])), rec_args.get("isolated", "error"))
        kp = build_kernel(g, rec_args.get("objective", NCUT), result.get("rho", AUTO))
        return lambda p: kernel_kmeans_objective(kp, p) + reg(p)
    if result.get("mode") == "vectors":
        data, _ = load_csv_vectors(args.input, rec_args.get("has_labels", False), rec_args.get("normalize", False))

        def fn(p):
            geom = VectorGeometry(data)
            geom.update_means(p)
            return geom.fit(p) + reg(p)

        return fn
    raise InvalidInput("recomputation is supported for cluster and kkm records only")


def cmd_audit(args) -> int:
    record = read_json(args.result)
    result = record.get("result", record)
    recompute = _recompute(record, args) if args.input else None
    report = audit_objective(result, recompute=recompute, strict=args.strict)
    _emit({"command": "audit", "args": _args_dict(args), "audit": report.as_dict()}, args.out)
    return 0 if report.ok else 1


# ---- parser ----------------------------------------------------------------

def _add_out(p, results: bool = False) -> None:
    p.add_argument("--out", help="JSON output path (default: stdout)")
    if results:
        p.add_argument("--out-labels", help="also write one label per line here")
        p.add_argument("--rank-size", help="rank-size TSV path (default: <out>.ranksize.tsv)")
        p.add_argument("--figures", help="directory for PNG figures (needs matplotlib)")


def _add_solver(p) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="regularizer weight")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--max-sweeps", type=int, default=100)
    p.add_argument("--order", choices=(FIXED, SHUFFLED), default=FIXED)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _add_graph_input(p) -> None:
    p.add_argument("--input", required=True, help="edge list: 'u v [w]' per line")
    p.add_argument("--labels", help="ground-truth label file, one label per line")
    p.add_argument("--objective", choices=KINDS, default=NCUT)
    p.add_argument("--rho", type=_rho, default=AUTO, help="diagonal shift, or 'auto' for the smallest PSD one")
    p.add_argument("--isolated", choices=("error", "self-loop"), default="error",
                   help="what to do with zero-degree nodes")


def _add_vector_input(p) -> None:
    p.add_argument("--input", required=True, help="numeric CSV")
    p.add_argument("--has-labels", action="store_true", help="last CSV column holds labels")
    p.add_argument("--labels", help="separate label file")
    p.add_argument("--normalize", action="store_true", help="min-max scale each feature to [0, 1]")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plcuts", description="Power-law regularized graph cuts and clustering.")
    sub = ap.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate synthetic data").add_subparsers(dest="what", required=True)
    p = synth.add_parser("pycrp-sbm", help="SBM graph on Pitman-Yor CRP labels")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--diag-mean", type=float, default=0.3)
    p.add_argument("--diag-var", type=float, default=0.001)
    p.add_argument("--offdiag-mean", type=float, default=0.01)
    p.add_argument("--offdiag-var", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-edges", required=True)
    p.add_argument("--out-labels", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_synth_sbm)
    p = synth.add_parser("blobs", help="Gaussian blobs with Pitman-Yor CRP sizes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--blob-std", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-csv", required=True, help="CSV with the label as last column")
    _add_out(p)
    p.set_defaults(func=cmd_synth_blobs)

    graph = sub.add_parser("graph", help="build graphs").add_subparsers(dest="what", required=True)
    p = graph.add_parser("from-vectors", help="Gaussian similarity graph from a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--has-labels", action="store_true")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--sigma", type=_sigma, default="auto", help="bandwidth, or 'auto' for the median distance")
    p.add_argument("--sparsify", choices=(NONE, "knn", "eps"), default=NONE)
    p.add_argument("--param", type=float, help="k for knn, threshold for eps")
    p.add_argument("--out-edges", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_graph_from_vectors)

    cluster = sub.add_parser("cluster", help="power-law regularized clustering").add_subparsers(
        dest="what", required=True)
    p = cluster.add_parser("graph", help="cluster a graph under a cut objective")
    _add_graph_input(p)
    _add_solver(p)
    _add_out(p, results=True)
    p.set_defaults(func=cmd_cluster_graph)
    p = cluster.add_parser("vectors", help="power-law means on vectors")
    _add_vector_input(p)
    _add_solver(p)
    _add_out(p, results=True)
    p.set_defaults(func=cmd_cluster_vectors)

    base = sub.add_parser("baseline", help="comparison algorithms").add_subparsers(dest="what", required=True)
    p = base.add_parser("kkm", help="weighted kernel k-means at fixed k")
    _add_graph_input(p)
    p.add_argument("--k", type=int, help="cluster count (default: from --labels)")
    p.add_argument("--max-sweeps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p, results=True)
    p.set_defaults(func=cmd_baseline_kkm)
    p = base.add_parser("kmeans", help="Lloyd k-means")
    _add_vector_input(p)
    p.add_argument("--k", type=int)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p, results=True)
    p.set_defaults(func=cmd_baseline_kmeans)
    p = base.add_parser("pyp", help="pyp-means")
    _add_vector_input(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--squared", action="store_true", help="use squared distances")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p, results=True)
    p.set_defaults(func=cmd_baseline_pyp)

    ev = sub.add_parser("eval", help="compare partitions").add_subparsers(dest="what", required=True)
    p = ev.add_parser("nmi", help="NMI between two label files or result records")
    p.add_argument("a")
    p.add_argument("b")
    _add_out(p)
    p.set_defaults(func=cmd_eval_nmi)

    sw = sub.add_parser("sweep", help="parameter sweeps").add_subparsers(dest="what", required=True)
    p = sw.add_parser("run", help="run an experiment config (JSON)")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the config's output path")
    p.add_argument("--workers", type=int, help="override the config's worker count")
    p.add_argument("--figures", help="directory for PNG figures (needs matplotlib)")
    p.set_defaults(func=cmd_sweep_run)

    p = sub.add_parser("audit", help="check a result's objective traces")
    p.add_argument("result", help="result JSON")
    p.add_argument("--input", help="original data, to recompute the final objective from scratch")
    p.add_argument("--strict", action="store_true", help="fail on the first objective increase")
    _add_out(p)
    p.set_defaults(func=cmd_audit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (PlcutsError, OSError) as exc:
        print(f"plcuts: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
