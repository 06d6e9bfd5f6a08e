"""File formats: edge lists, numeric CSV, label files, result JSON, rank-size TSV."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .datagen import minmax_normalize
from .errors import InvalidInput, ParseError
from .partition import Partition, VectorDataset, WeightedGraph, partition_from_assignments

SCHEMA_VERSION = 1


def load_edge_list(path, n: int | None = None) -> WeightedGraph:
    """Read ``u v [w]`` lines (0-based ids, ``#`` starts a comment); symmetrized by max."""
    rows, cols, ws = [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if len(tok) not in (2, 3):
                raise ParseError(f"{path}:{lineno}: expected 'u v [w]', got {len(tok)} fields")
            try:
                u, v = int(tok[0]), int(tok[1])
                w = float(tok[2]) if len(tok) == 3 else 1.0
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric token in {line!r}") from None
            if u < 0 or v < 0:
                raise ParseError(f"{path}:{lineno}: node ids must be nonnegative")
            if w < 0 or not np.isfinite(w):
                raise InvalidInput(f"{path}:{lineno}: invalid edge weight {w}")
            rows.append(u)
            cols.append(v)
            ws.append(w)
    if not rows:
        raise ParseError(f"{path}: no edges found")
    size = max(max(rows), max(cols)) + 1
    if n is not None:
        size = max(size, int(n))
    return WeightedGraph.from_edges(size, rows, cols, ws)


def save_edge_list(g: WeightedGraph, path) -> None:
    """Write each undirected edge once (u <= v) with 17 significant digits."""
    A = g.adjacency.tocoo()
    keep = A.row <= A.col
    lines = [f"# nodes {g.n}\n"]
    lines += [f"{u} {v} {w:.17g}\n" for u, v, w in zip(A.row[keep], A.col[keep], A.data[keep])]
    _atomic_write(path, "".join(lines))


def load_labels(path) -> Partition:
    vals = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                vals.append(line)
    if not vals:
        raise ParseError(f"{path}: no labels found")
    return labels_to_partition(vals)


def labels_to_partition(vals) -> Partition:
    """Dense partition from arbitrary label tokens, by first appearance."""
    ids: dict = {}
    assign = [ids.setdefault(v, len(ids)) for v in vals]
    return partition_from_assignments(assign)


def save_labels(p: Partition, path) -> None:
    _atomic_write(path, "".join(f"{int(z)}\n" for z in p.assign))


def load_csv_vectors(path, has_labels: bool = False, normalize: bool = False):
    """Numeric CSV, optionally with a final label column. Returns ``(data, truth or None)``."""
    rows = []
    with open(path, newline="") as fh:
        for r in csv.reader(fh):
            if r and any(cell.strip() for cell in r):
                rows.append(r)
    if not rows:
        raise ParseError(f"{path}: empty file")
    width = len(rows[0])
    for i, r in enumerate(rows, 1):
        if len(r) != width:
            raise ParseError(f"{path}: row {i} has {len(r)} fields, expected {width}")
    nfeat = width - 1 if has_labels else width
    if nfeat < 1:
        raise ParseError(f"{path}: no feature columns")
    X = np.empty((len(rows), nfeat))
    for i, r in enumerate(rows):
        for j in range(nfeat):
            try:
                X[i, j] = float(r[j])
            except ValueError:
                raise ParseError(f"{path}: row {i + 1}, column {j + 1}: non-numeric value {r[j]!r}") from None
    if not np.all(np.isfinite(X)):
        raise ParseError(f"{path}: non-finite values")
    if normalize:
        X = minmax_normalize(X)
    truth = labels_to_partition([r[-1].strip() for r in rows]) if has_labels else None
    return VectorDataset(X), truth


def save_csv_vectors(data: VectorDataset, path, labels: Partition | None = None) -> None:
    lines = []
    for i, x in enumerate(data.points):
        cells = [f"{v:.17g}" for v in x]
        if labels is not None:
            cells.append(str(int(labels.assign[i])))
        lines.append(",".join(cells) + "\n")
    _atomic_write(path, "".join(lines))


def rank_size_tsv(pairs) -> str:
    return "rank\tsize\n" + "".join(f"{r}\t{s}\n" for r, s in pairs)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(obj: dict, path) -> None:
    """Atomically write a result record with schema version and timestamp."""
    record = {"schema_version": SCHEMA_VERSION, "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    record.update(obj)
    _atomic_write(path, json.dumps(record, indent=1, sort_keys=False, default=_json_default) + "\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
