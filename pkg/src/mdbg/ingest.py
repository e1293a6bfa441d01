"""CSV loading and train/validation/test partitioning."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DataError,
    MissingFileError,
    NonNumericValueError,
    RaggedRowsError,
    SpecOutOfRangeError,
    TooShortError,
)

# TSLib borders (train end, validation span, test span) for the ETT-small files.
ETT_BORDERS = {
    "ETTh": (8640, 2880, 2880),
    "ETTm": (34560, 11520, 11520),
}


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Aligned multivariate series stored dimension-major, shape (D, S)."""

    values: np.ndarray
    dim_names: tuple[str, ...]
    timestamps: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"values must be 2-D (D, S), got shape {values.shape}")
        D, S = values.shape
        if D < 1 or S < 1:
            raise DataError(f"dataset must have D >= 1 and S >= 1, got {values.shape}")
        if not np.isfinite(values).all():
            raise DataError("dataset contains NaN or infinite values")
        if len(self.dim_names) != D:
            raise DataError(f"{len(self.dim_names)} dimension names for {D} rows")
        if self.timestamps is not None and len(self.timestamps) != S:
            raise DataError(f"{len(self.timestamps)} timestamps for {S} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dim_names", tuple(self.dim_names))
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", tuple(self.timestamps))

    @property
    def D(self) -> int:
        return self.values.shape[0]

    @property
    def S(self) -> int:
        return self.values.shape[1]

    def slice(self, start: int, stop: int) -> "TimeSeriesDataset":
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return TimeSeriesDataset(self.values[:, start:stop], self.dim_names, ts)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesDataset):
            return NotImplemented
        return (
            self.dim_names == other.dim_names
            and self.timestamps == other.timestamps
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class SplitSpec:
    """Column borders for a three-way split.

    ``val_overlap``/``test_overlap`` trailing steps of the preceding split are
    prepended so the first validation/test window has a full input context.
    ``test_end`` defaults to the end of the series.
    """

    train_end: int
    val_end: int
    val_overlap: int = 0
    test_overlap: int = 0
    test_end: Optional[int] = None

    def validate(self, S: int) -> None:
        test_end = S if self.test_end is None else self.test_end
        if not 0 < self.train_end <= self.val_end <= test_end <= S:
            raise SpecOutOfRangeError(
                f"need 0 < train_end <= val_end <= test_end <= S; got "
                f"{self.train_end}, {self.val_end}, {test_end}, S={S}"
            )
        for name in ("val_overlap", "test_overlap"):
            ov = getattr(self, name)
            if not 0 <= ov <= self.train_end:
                raise SpecOutOfRangeError(f"{name}={ov} outside [0, train_end={self.train_end}]")


def ett_split_spec(name: str, overlap: int = 12) -> SplitSpec:
    """TSLib partition for an ETT file name such as ``ETTh1`` or ``ETTm2.csv``."""
    stem = Path(name).stem
    try:
        train, val, test = ETT_BORDERS[stem[:4]]
    except KeyError:
        raise DataError(f"no ETT borders known for {name!r}") from None
    return SplitSpec(train, train + val, overlap, overlap, train + val + test)


def load_csv(path, has_timestamp_column: bool = True) -> TimeSeriesDataset:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        names = header[1:] if has_timestamp_column else header
        if not names:
            raise DataError(f"{path}: no numeric columns in header")
        width = len(header)
        rows, stamps = [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise RaggedRowsError(line, width, len(row))
            if has_timestamp_column:
                stamps.append(row[0])
                row = row[1:]
            parsed = []
            for col, cell in zip(names, row):
                try:
                    x = float(cell)
                except ValueError:
                    raise NonNumericValueError(line, col, cell) from None
                if not math.isfinite(x):
                    raise NonNumericValueError(line, col, cell)
                parsed.append(x)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64).T
    return TimeSeriesDataset(values, tuple(names), tuple(stamps) if has_timestamp_column else None)


def write_csv(ds: TimeSeriesDataset, path) -> None:
    """Write ``ds`` in the layout :func:`load_csv` reads; floats use ``repr`` so they round-trip."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        stamped = ds.timestamps is not None
        writer.writerow((["date"] if stamped else []) + list(ds.dim_names))
        for t in range(ds.S):
            row = [repr(float(x)) for x in ds.values[:, t]]
            writer.writerow(([ds.timestamps[t]] if stamped else []) + row)


def split(ds: TimeSeriesDataset, spec: SplitSpec):
    """Return ``(train, val, test)``; only ``train`` should feed graph construction."""
    spec.validate(ds.S)
    test_end = ds.S if spec.test_end is None else spec.test_end
    train = ds.slice(0, spec.train_end)
    val = ds.slice(spec.train_end - spec.val_overlap, spec.val_end)
    test = ds.slice(spec.val_end - spec.test_overlap, test_end)
    return train, val, test


def window_count(split_len: int, input_len: int, horizon: int) -> int:
    if input_len < 0 or horizon < 0:
        raise TooShortError("input_len and horizon must be non-negative")
    if split_len < input_len + horizon:
        raise TooShortError(
            f"split of length {split_len} cannot hold input {input_len} + horizon {horizon}"
        )
    return split_len - input_len - horizon + 1


def standardize(datasets: Sequence[TimeSeriesDataset], reference: TimeSeriesDataset):
    """Z-score every dataset with the per-dimension mean/std of ``reference``.

    Constant reference dimensions are only centred.
    """
    mean = reference.values.mean(axis=1, keepdims=True)
    std = reference.values.std(axis=1, keepdims=True)
    std = np.where(std > 0, std, 1.0)
    return [TimeSeriesDataset((d.values - mean) / std, d.dim_names, d.timestamps) for d in datasets]
