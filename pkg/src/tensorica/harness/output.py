"""CSV emission.  Floats use the shortest round-trip repr; missing values
(``nan``/``inf`` sentinels) are written as empty fields."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

TRACE_HEADER = ("run_id", "t", "phase", "tan_angle_min", "component_index")
SCALING_HEADER = ("axis", "value", "mean_error", "stderr", "n_runs")
SUMMARY_HEADER = (
    "run_id", "d", "T", "replication", "seed", "final_error",
    "window_mean_error", "first_warm_t", "final_index",
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return ""
        return repr(float(value))  # plain repr, also for numpy scalars
    return str(value)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_trace_csv(path, traces) -> Path:
    """``traces`` is an iterable of ``(run_id, RunTrace)`` pairs (may be empty)."""
    def rows():
        for run_id, trace in traces:
            yield from trace.rows(run_id)
    return write_rows(path, TRACE_HEADER, rows())


def write_scaling_csv(path, summary) -> Path:
    return write_rows(
        path, SCALING_HEADER,
        ((summary.axis, p.value, p.mean_error, p.stderr, p.n_runs) for p in summary.points),
    )


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
