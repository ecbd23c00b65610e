"""File formats for every artifact the command line emits.

All text artifacts are UTF-8 with "\n" line endings and floats printed by
repr-faithful %.17g, so runs with equal inputs produce byte-identical files.
Matrices go to dense CSV or to a flat float64 binary next to a small JSON
header; row-major either way.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .util import fmt_float


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def save_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


def _header_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".json"


def save_matrix(path: str, M) -> None:
    """Dense CSV for .csv paths, flat row-major float64 binary otherwise."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("only 2-d matrices are exportable")
    if path.endswith(".csv"):
        _write_lines(path, (",".join(fmt_float(v) for v in row) for row in M))
        return
    np.ascontiguousarray(M).tofile(path)
    save_json(_header_path(path), {
        "rows": int(M.shape[0]), "cols": int(M.shape[1]),
        "dtype": "float64", "layout": "row-major",
    })


def load_matrix(path: str) -> np.ndarray:
    if path is None:
        raise ValueError("a file path is required")
    if path.endswith(".csv"):
        M = np.loadtxt(path, delimiter=",", ndmin=2)
        return M
    head = load_json(_header_path(path))
    if head.get("layout") != "row-major":
        raise ValueError(f"unsupported layout {head.get('layout')!r}")
    M = np.fromfile(path, dtype=head.get("dtype", "float64"))
    rows, cols = int(head["rows"]), int(head["cols"])
    if M.size != rows * cols:
        raise ValueError(f"binary payload holds {M.size} values, header says "
                         f"{rows}x{cols}")
    return M.reshape(rows, cols)


# ---------------------------------------------------------------------------
# one-purpose CSV writers
# ---------------------------------------------------------------------------


def save_esd_csv(path: str, eigenvalues) -> None:
    lam = np.asarray(getattr(eigenvalues, "eigenvalues", eigenvalues), dtype=float)
    _write_lines(path, ["eigenvalue", *map(fmt_float, lam.ravel())])


def save_density_csv(path: str, x, density) -> None:
    x = np.asarray(x, dtype=float).ravel()
    d = np.asarray(density, dtype=float).ravel()
    if x.shape != d.shape:
        raise ValueError("x and density must have equal length")
    _write_lines(path, ["x,density",
                        *(f"{fmt_float(a)},{fmt_float(b)}" for a, b in zip(x, d))])


def save_hist_csv(path: str, edges, density) -> None:
    edges = np.asarray(edges, dtype=float).ravel()
    d = np.asarray(density, dtype=float).ravel()
    if edges.size != d.size + 1:
        raise ValueError("need one more edge than density values")
    _write_lines(path, ["bin_left,bin_right,density",
                        *(f"{fmt_float(edges[i])},{fmt_float(edges[i + 1])},{fmt_float(d[i])}"
                          for i in range(d.size))])


CONCENTRATION_COLUMNS = ("n", "d0", "d1", "seed", "op_ck", "op_grad", "op_ntk",
                         "lmin_ck", "lmin_ntk", "frob", "floor_ck", "floor_ntk")

REGRESSION_COLUMNS = ("n", "d0", "d1", "lambda", "kernel_mode", "seed",
                      "train_rf", "train_k", "test_rf", "test_k",
                      "train_asym", "test_asym", "lambda_eff")

_FIELD_FOR_COLUMN = {"lambda": "lam"}


def _record_cell(rec, col: str) -> str:
    v = getattr(rec, _FIELD_FOR_COLUMN.get(col, col))
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt_float(v)


def save_concentration_csv(path: str, report) -> None:
    records = getattr(report, "records", report)
    _write_lines(path, [",".join(CONCENTRATION_COLUMNS),
                        *(",".join(_record_cell(r, c) for c in CONCENTRATION_COLUMNS)
                          for r in records)])


def save_regression_csv(path: str, reports) -> None:
    _write_lines(path, [",".join(REGRESSION_COLUMNS),
                        *(",".join(_record_cell(r, c) for c in REGRESSION_COLUMNS)
                          for r in reports)])


def read_csv_columns(path: str) -> dict:
    """Columns of a headed CSV as float arrays (non-numeric columns stay str)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [row[j] for row in body]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = col
    return out
