"""Plot-ready writers for trajectories, equilibria, nullclines and sweep grids.

Floats are written with 17 significant digits so that files round-trip the
underlying doubles exactly. Undefined values become blank CSV fields or JSON
``null``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from iffl.equilibria import Nullclines
from iffl.ode import Trajectory
from iffl.sweep import BandReport, CellResult, Heatmap

TRAJECTORY_COLUMNS = ("t", "x", "y", "u", "p", "v", "q", "ln_u")


def fmt_float(value: float | None) -> str:
    if value is None:
        return ""
    value = float(value)
    if not math.isfinite(value):
        return ""
    return format(value, ".17g")


def _encode(value: Any) -> str:
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g") if math.isfinite(value) else "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    if hasattr(value, "value"):  # enums
        return _encode(value.value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def json_line(record: dict) -> str:
    """One JSON object; floats carry 17 significant digits, non-finite become null."""
    return _encode(record)


def write_jsonl(path: Path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json_line(rec) + "\n")
            n += 1
    return n


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]], comments: Sequence[str] = ()) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            writer.writerow(row)
            n += 1
    return n


def trajectory_records(traj: Trajectory) -> list[dict]:
    n = len(traj)
    nan = np.full(n, np.nan)
    x = traj.x if traj.is_full else nan
    u = traj.u if traj.is_full else nan
    ln_u = traj.w if traj.is_full else nan
    cols = (traj.times, x, traj.y, u, traj.p, traj.v, traj.q, ln_u)
    return [{name: float(col[i]) for name, col in zip(TRAJECTORY_COLUMNS, cols)} for i in range(n)]


def write_trajectory(path: Path, traj: Trajectory, fmt: str = "csv") -> int:
    records = trajectory_records(traj)
    if fmt == "jsonl":
        return write_jsonl(path, records)
    rows = ([fmt_float(r[c]) for c in TRAJECTORY_COLUMNS] for r in records)
    return write_csv(path, TRAJECTORY_COLUMNS, rows)


def nullcline_records(nc: Nullclines) -> list[dict]:
    out = []
    for name, arr in (("p_axis", nc.p_axis), ("p_line", nc.p_line), ("y_curve", nc.y_curve)):
        out += [{"component": name, "p": float(p), "y": float(y)} for p, y in arr]
    return out


def write_nullclines(path: Path, nc: Nullclines, fmt: str = "csv") -> int:
    records = nullcline_records(nc)
    if fmt == "jsonl":
        return write_jsonl(path, records)
    rows = ([r["component"], fmt_float(r["p"]), fmt_float(r["y"])] for r in records)
    return write_csv(path, ("component", "p", "y"), rows)


def cell_record(cell: CellResult, names: Sequence[str]) -> dict:
    rec: dict[str, Any] = {name: v for name, v in zip(names, cell.values)}
    mu = cell.mu_algebraic if cell.mu_algebraic is not None else cell.mu_simulated
    rec.update(mu=mu, mu_algebraic=cell.mu_algebraic, mu_simulated=cell.mu_simulated,
               n_equilibria=len(cell.mu_all), label=cell.label, flag=cell.flag)
    return rec


def write_cells(path: Path, cells: Sequence[CellResult], names: Sequence[str], comments: Sequence[str],
                fmt: str = "csv") -> int:
    records = [cell_record(c, names) for c in cells]
    if fmt == "jsonl":
        head = [{"axis": line} for line in comments]
        return write_jsonl(path, head + records) - len(head)
    header = (*names, "mu", "mu_algebraic", "mu_simulated", "n_equilibria", "label", "flag")
    rows = (
        [*(fmt_float(r[n]) for n in names), fmt_float(r["mu"]), fmt_float(r["mu_algebraic"]),
         fmt_float(r["mu_simulated"]), str(r["n_equilibria"]), r["label"], r["flag"] or ""]
        for r in records
    )
    return write_csv(path, header, rows, comments)


def heatmap_axis_lines(hm: Heatmap) -> list[str]:
    return [
        f"axis1 {hm.axis1} ({len(hm.axis1_values)}): " + " ".join(fmt_float(v) for v in hm.axis1_values),
        f"axis2 {hm.axis2} ({len(hm.axis2_values)}): " + " ".join(fmt_float(v) for v in hm.axis2_values),
        "row-major: axis1 outer, axis2 inner",
    ]


def write_heatmap(path: Path, hm: Heatmap, fmt: str = "csv") -> int:
    return write_cells(path, hm.cells, (hm.axis1, hm.axis2), heatmap_axis_lines(hm), fmt)


def band_records(report: BandReport, method: str) -> list[dict]:
    edges: list[float | None] = [None, *report.boundaries, None]
    return [
        {"method": method, "band": k, "lambda_lo": edges[k], "lambda_hi": edges[k + 1], "label": label}
        for k, label in enumerate(report.labels)
    ]


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
