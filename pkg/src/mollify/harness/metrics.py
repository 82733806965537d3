"""
This module defines the metrics CSV files of a run.

Per-seed metrics files have one row per epoch with the columns

    epoch, step, train_loss, train_acc, valid_loss, valid_acc, expected_skip,
    p_layer_1, ..., p_layer_L, wall_ms

Files are UTF-8 with LF line endings; floats are written in their shortest
round-trip form, so rows parse back to the exact values and identical runs produce
identical bytes.
"""

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from mollify.exceptions.base import MollifyValueError

__all__ = [
    "MetricsRow",
    "metrics_header",
    "format_value",
    "MetricsWriter",
    "read_metrics",
    "aggregate_medians",
    "write_aggregate",
    "epochs_to_accuracy",
    "write_summary",
]

PathLike = Union[str, Path]

_LEADING = ("epoch", "step", "train_loss", "train_acc", "valid_loss", "valid_acc")


@dataclass(frozen=True)
class MetricsRow:
    """
    Metrics of one evaluation interval.
    """

    epoch: int
    step: int
    train_loss: float
    train_acc: float
    valid_loss: float
    valid_acc: float
    expected_skip: float
    p_layers: Tuple[float, ...]
    wall_ms: int = 0

    def values(self) -> List[Union[int, float]]:
        return [
            self.epoch,
            self.step,
            self.train_loss,
            self.train_acc,
            self.valid_loss,
            self.valid_acc,
            self.expected_skip,
            *self.p_layers,
            self.wall_ms,
        ]


def metrics_header(num_layers: int) -> List[str]:
    """
    Examples:
        >>> metrics_header(2)[-4:]
        ['expected_skip', 'p_layer_1', 'p_layer_2', 'wall_ms']
    """
    return [
        *_LEADING,
        "expected_skip",
        *(f"p_layer_{l}" for l in range(1, num_layers + 1)),
        "wall_ms",
    ]


def format_value(value: Union[int, float, None]) -> str:
    """
    Examples:
        >>> format_value(0.1), format_value(3), format_value(None)
        ('0.1', '3', '')
    """
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


class MetricsWriter:
    """
    Appends metrics rows to a CSV file, writing the header on creation.

    Use as a context manager; rows are flushed as they are written so the file is
    complete up to the last finished epoch even if training stops.
    """

    def __init__(self, path: PathLike, num_layers: int) -> None:
        self.path = Path(path)
        self.num_layers = num_layers
        self._stream = None

    def __enter__(self) -> "MetricsWriter":
        self._stream = open(self.path, "w", encoding="utf-8", newline="")
        _writer(self._stream).writerow(metrics_header(self.num_layers))
        self._stream.flush()
        return self

    def write(self, row: MetricsRow) -> None:
        if len(row.p_layers) != self.num_layers:
            raise MollifyValueError(
                f"cannot write metrics; row has {len(row.p_layers)} layer "
                f"probabilities, expected {self.num_layers}. "
            )
        _writer(self._stream).writerow([format_value(v) for v in row.values()])
        self._stream.flush()

    def __exit__(self, *exc_info) -> None:
        self._stream.close()


def read_metrics(path: PathLike) -> Tuple[List[str], List[Dict[str, float]]]:
    """
    Read a metrics file into its header and rows of floats (NaN for empty cells).

    Raises `MollifyValueError` if a cell is not a number.
    """
    with open(path, encoding="utf-8", newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader, [])
        rows = []
        for number, cells in enumerate(reader, start=2):
            try:
                values = [float(cell) if cell else math.nan for cell in cells]
            except ValueError:
                raise MollifyValueError(
                    f"cannot read metrics {path}; line {number} holds a value that is "
                    "not a number. "
                ) from None
            rows.append(dict(zip(header, values)))
    return header, rows


def aggregate_medians(
    runs: Sequence[Sequence[Mapping[str, float]]], header: Sequence[str]
) -> List[List[float]]:
    """
    Per-epoch medians over runs, one row per epoch reached by any run, in the column
    order of `header` (whose first column must be `epoch`).

    Examples:
        >>> first = [{"epoch": 1, "x": 1.0}]
        >>> second = [{"epoch": 1, "x": 3.0}, {"epoch": 2, "x": 5.0}]
        >>> runs = [first, second]
        >>> aggregate_medians(runs, ["epoch", "x"])
        [[1.0, 2.0], [2.0, 5.0]]
    """
    by_epoch: Dict[float, List[Mapping[str, float]]] = {}
    for rows in runs:
        for row in rows:
            by_epoch.setdefault(row["epoch"], []).append(row)
    aggregated = []
    for epoch in sorted(by_epoch):
        rows = by_epoch[epoch]
        aggregated.append(
            [float(epoch)]
            + [float(np.median([row[column] for row in rows])) for column in header[1:]]
        )
    return aggregated


def _write_rows(path: PathLike, header: Sequence[str], rows) -> None:
    buffer = io.StringIO()
    writer = _writer(buffer)
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    with open(path, "w", encoding="utf-8", newline="") as stream:
        stream.write(buffer.getvalue())


def write_aggregate(path: PathLike, metrics_paths: Sequence[PathLike]) -> None:
    """
    Write the per-epoch medians of the metrics files in `metrics_paths` to `path`.
    """
    header: List[str] = []
    runs = []
    for metrics_path in metrics_paths:
        header, rows = read_metrics(metrics_path)
        runs.append(rows)
    _write_rows(path, header, aggregate_medians(runs, header))


def epochs_to_accuracy(
    rows: Sequence[Mapping[str, float]], target: float, column: str = "train_acc"
) -> Optional[int]:
    """
    First epoch whose `column` reaches `target`, or None.

    Examples:
        >>> rows = [{"epoch": 1, "train_acc": 0.5}, {"epoch": 2, "train_acc": 1.0}]
        >>> epochs_to_accuracy(rows, 0.99)
        2
    """
    for row in rows:
        if row[column] >= target:
            return int(row["epoch"])
    return None


def write_summary(path: PathLike, epochs: Mapping[int, Optional[int]]) -> None:
    """
    Write the epochs each seed needed to reach the target accuracy; empty when it
    never did.
    """
    _write_rows(
        path,
        ["seed", "epochs_to_target"],
        [[seed, epochs[seed]] for seed in sorted(epochs)],
    )
