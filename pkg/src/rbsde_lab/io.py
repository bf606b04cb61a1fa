"""Deterministic CSV and JSON output."""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .lattice import Lattice
from .snell import RbsdeSolution


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def _cell(x):
    x = _plain(x)
    return repr(x) if isinstance(x, float) else x


def write_csv(path, rows, columns=None):
    rows = [_plain(r) for r in rows]
    if columns is None:
        columns = list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in columns])


def solution_rows(lat: Lattice, sol: RbsdeSolution):
    """One row per node: time, Y on both sides, Z, psi per mark, A_incr, C_jump."""
    rows = []
    for n in range(lat.n_nodes):
        row = {"node": n, "time_index": lat.time_index(n), "time": lat.time(n),
               "Y_v": sol.Y.v[n], "Y_vplus": sol.Y.vplus[n], "Z": sol.Z[n]}
        for i, name in enumerate(lat.marks.names):
            row[f"psi_{name}"] = sol.psi[n, i]
        row["A_incr"] = sol.A_incr[n]
        row["C_jump"] = sol.C_jump[n]
        rows.append(row)
    return rows
