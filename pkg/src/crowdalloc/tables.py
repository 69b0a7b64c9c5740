"""CSV result tables.

Every command writes rows of the same shape. ``metric_name`` is one of
``METRICS``; reals are written with nine significant digits so a table
re-parses to the values it was written from, up to that precision.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

METRICS = (
    "accuracy",
    "expected_steps",
    "bound_upper",
    "bound_lower_accuracy",
    "z_threshold",
    "mean",
    "variance",
    "support_bound",
    "rho0",
    "rho0_approx",
    "residual",
)


@dataclass(frozen=True)
class OutputRow:
    experiment_id: str
    axis_name: str
    axis_value: float
    policy: str
    metric_name: str
    value: float
    stderr: float
    seed: int

    def __post_init__(self):
        if self.metric_name not in METRICS:
            raise ValueError(f"unknown metric {self.metric_name!r}")
        if not self.stderr >= 0:
            raise ValueError("stderr must be non-negative")


HEADER = tuple(f.name for f in fields(OutputRow))


def fmt(value: float) -> str:
    return format(float(value), ".9g")


def write_rows(rows, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        values = astuple(row)
        writer.writerow(
            [
                values[0],
                values[1],
                fmt(values[2]),
                values[3],
                values[4],
                fmt(values[5]),
                fmt(values[6]),
                int(values[7]),
            ]
        )


def render(rows) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def read_rows(stream) -> list[OutputRow]:
    reader = csv.reader(stream)
    header = next(reader)
    if tuple(header) != HEADER:
        raise ValueError(f"unexpected header {header}")
    rows = []
    for rec in reader:
        rows.append(
            OutputRow(rec[0], rec[1], float(rec[2]), rec[3], rec[4], float(rec[5]), float(rec[6]), int(rec[7]))
        )
    return rows


def same_value(a: float, b: float) -> bool:
    return (math.isnan(a) and math.isnan(b)) or a == b
