"""Loading prices, turning them into scaled returns, and reading/writing artifacts."""
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataError


@dataclass
class SeriesFrame:
    """A timestamped sequence of N-dimensional observations.

    ``values`` has shape ``(T, N)``; ``timestamps`` are opaque, strictly
    increasing labels (ISO dates sort correctly as strings).
    """

    timestamps: list
    values: np.ndarray
    names: list = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.ndim != 2:
            raise DataError("values must be a (T, N) array")
        self.timestamps = [str(s) for s in self.timestamps]
        if len(self.timestamps) != self.values.shape[0]:
            raise DataError(
                f"{len(self.timestamps)} timestamps but {self.values.shape[0]} rows"
            )
        if self.values.shape[0] < 1:
            raise DataError("a series needs at least one observation")
        if not np.all(np.isfinite(self.values)):
            raise DataError("series contains nonfinite values")
        if self.names is None:
            self.names = [f"x{i}" for i in range(self.values.shape[1])]
        if len(self.names) != self.values.shape[1]:
            raise DataError("one name per column is required")

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, names=None):
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        width = max(6, len(str(n)))
        return cls([f"{i:0{width}d}" for i in range(n)], values, names)


@dataclass
class ScalingInfo:
    std: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        self.std = np.atleast_1d(np.asarray(self.std, dtype=float))
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if np.any(~(self.std > 0)):
            raise DataError("standard deviation must be positive in every dimension")

    def to_dict(self):
        return {"std": self.std.tolist(), "mean": self.mean.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["std"], d["mean"])


def load_price_csv(path, value_columns=None):
    """Read a ``date,<col>...`` CSV into a SeriesFrame.

    The date column is the one named ``date`` (any case), else the first
    column. ``value_columns`` defaults to every other column. Errors carry the
    1-based data row number.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        lowered = [h.lower() for h in header]
        date_idx = lowered.index("date") if "date" in lowered else 0
        if value_columns is None:
            value_columns = [h for i, h in enumerate(header) if i != date_idx]
        elif isinstance(value_columns, str):
            value_columns = [value_columns]
        cols = []
        for name in value_columns:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
            cols.append(header.index(name))
        if not cols:
            raise DataError(f"{path}: no value columns")

        stamps, rows = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise DataError(f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            stamp = row[date_idx].strip()
            if stamps and not stamp > stamps[-1]:
                raise DataError(
                    f"{path}: row {row_no} date {stamp!r} does not follow {stamps[-1]!r}"
                )
            vals = []
            for c in cols:
                cell = row[c].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {row_no} column {header[c]!r}: cannot parse {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {row_no} column {header[c]!r}: nonfinite value")
                vals.append(v)
            stamps.append(stamp)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return SeriesFrame(stamps, np.array(rows), list(value_columns))


def to_returns(prices):
    """Simple returns ``(p_t - p_{t-1}) / p_{t-1}``, stamped with the later date."""
    p = prices.values
    if p.shape[0] < 2:
        raise DataError("need at least two prices to form returns")
    zero = np.argwhere(p[:-1] == 0.0)
    if zero.size:
        raise DataError(f"zero price at index {int(zero[0, 0])}")
    r = (p[1:] - p[:-1]) / p[:-1]
    return SeriesFrame(prices.timestamps[1:], r, list(prices.names))


def standardize(series, stats=None, center=False):
    """Divide each dimension by its population standard deviation.

    Pass the ``ScalingInfo`` returned for the training split as ``stats`` to
    scale held-out data with training statistics. The mean is recorded but
    only subtracted when ``center`` is true.
    """
    x = series.values
    if stats is None:
        if x.shape[0] < 2:
            raise DataError("need at least two points to estimate a standard deviation")
        std = x.std(axis=0)
        if np.any(std == 0.0):
            raise DataError("zero standard deviation; cannot standardize")
        stats = ScalingInfo(std, x.mean(axis=0))
    out = (x - stats.mean) / stats.std if center else x / stats.std
    return SeriesFrame(list(series.timestamps), out, list(series.names)), stats


def split(series, train_len):
    T = len(series)
    if not 0 < train_len < T:
        raise DataError(f"train_len must be in (0, {T}), got {train_len}")
    head = SeriesFrame(series.timestamps[:train_len], series.values[:train_len], list(series.names))
    tail = SeriesFrame(series.timestamps[train_len:], series.values[train_len:], list(series.names))
    return head, tail


def concat(first, second):
    return SeriesFrame(
        first.timestamps + second.timestamps,
        np.vstack([first.values, second.values]),
        list(first.names),
    )


def write_series_csv(series, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *series.names])
        for stamp, row in zip(series.timestamps, series.values):
            w.writerow([stamp, *(repr(float(v)) for v in row)])


def write_report_json(report, path):
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(dumps_report(report))


def dumps_report(report):
    return json.dumps(_plain(report), indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
