"""Dataset container, CSV input/output, and column standardization.

Conventions fixed here and relied on everywhere else:

* matrices are float64, observations in rows, features in columns;
* standardization uses the population convention (divide by n, not n - 1);
* zero-variance columns are flagged and never divided by — downstream
  penalized fits keep their coefficients at exactly 0;
* CSV numeric output is printed with 17 significant digits so that finite
  doubles round-trip bit-identically.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .families import Family, resolve_family

# Columns whose population sd falls below this are treated as constant.
ZERO_VARIANCE_TOL = 1e-12


def fmt17(value: float) -> str:
    """Format a float with 17 significant digits (lossless for float64)."""
    return "%.17g" % float(value)


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a temp file + rename so readers never see partial output."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


def sample_sd(values: np.ndarray) -> float:
    """Standard deviation with the n - 1 divisor (reporting helper).

    The modelling code uses the population convention; this exists for
    summaries that follow the usual sample convention.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise DataError("sample_sd expects a 1-d vector")
    if values.size < 2:
        raise DataError("sample_sd needs at least 2 values")
    return float(np.sqrt(np.sum((values - values.mean()) ** 2) / (values.size - 1)))


def population_sd(values: np.ndarray) -> float:
    """Standard deviation with the n divisor (the convention used in fits)."""
    values = np.asarray(values, dtype=np.float64)
    return float(np.sqrt(np.mean((values - values.mean()) ** 2)))


@dataclass(frozen=True)
class Dataset:
    """Immutable design matrix + response + family.

    Arrays are copied on construction and marked read-only, so a Dataset can
    be shared freely across folds and threads.
    """

    x: np.ndarray
    y: np.ndarray
    family: Family
    column_names: tuple[str, ...] = ()
    response_name: str = "y"

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64, order="C", copy=True)
        y = np.array(self.y, dtype=np.float64, copy=True)
        if x.ndim != 2:
            raise DataError("x must be a 2-d matrix")
        if y.ndim != 1:
            raise DataError("y must be a 1-d vector")
        n, p = x.shape
        if n != y.size:
            raise DataError(f"x has {n} rows but y has {y.size} values")
        if n < 2:
            raise DataError("need at least 2 observations")
        if p < 1:
            raise DataError("need at least 1 feature column")
        if not np.all(np.isfinite(x)):
            raise DataError("x contains non-finite values")
        if not np.all(np.isfinite(y)):
            raise DataError("y contains non-finite values")
        family = resolve_family(self.family)
        family.validate_response(y)
        names = tuple(self.column_names) if self.column_names else tuple(
            f"x{j}" for j in range(p)
        )
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        if len(set(names)) != p:
            raise DataError("column names must be unique")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, rows: np.ndarray) -> "Dataset":
        """New Dataset restricted to the given row indices."""
        return Dataset(
            x=self.x[rows],
            y=self.y[rows],
            family=self.family,
            column_names=self.column_names,
            response_name=self.response_name,
        )


@dataclass(frozen=True)
class Standardization:
    """Per-column centering/scaling record (population convention).

    column_sds holds 1.0 for flagged zero-variance columns so that dividing
    is always safe; zero_variance marks which columns those are. y_mean is
    set for gaussian responses only (they are centered internally).
    """

    column_means: np.ndarray
    column_sds: np.ndarray
    zero_variance: np.ndarray
    y_mean: float | None = None

    def __post_init__(self):
        for name in ("column_means", "column_sds", "zero_variance"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Standardize new data with the stored means/sds."""
        return (np.asarray(x, dtype=np.float64) - self.column_means) / self.column_sds

    def unapply(self, x_std: np.ndarray) -> np.ndarray:
        """Invert apply(); recovers constant columns exactly (their sd slot is 1)."""
        return np.asarray(x_std, dtype=np.float64) * self.column_sds + self.column_means


def column_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Means, safe population sds, and the zero-variance flags of the columns."""
    x = np.asarray(x, dtype=np.float64)
    means = x.mean(axis=0)
    sds = np.sqrt(np.mean((x - means) ** 2, axis=0))
    zero_var = sds < ZERO_VARIANCE_TOL
    safe_sds = np.where(zero_var, 1.0, sds)
    return means, safe_sds, zero_var


def standardize(d: Dataset) -> tuple[np.ndarray, Standardization]:
    """Center every column and scale the non-constant ones to unit population sd.

    Returns the standardized matrix and the Standardization needed to map
    back. Constant columns come out as all zeros and are flagged.
    """
    means, sds, zero_var = column_stats(d.x)
    if bool(np.all(zero_var)):
        raise DataError("every feature column is constant; nothing to fit")
    x_std = (d.x - means) / sds
    y_mean = float(np.mean(d.y)) if d.family.name == "gaussian" else None
    info = Standardization(
        column_means=means, column_sds=sds, zero_variance=zero_var, y_mean=y_mean
    )
    return x_std, info


def _parse_cell(cell: str, row_number: int, column_name: str, path: str) -> float:
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        raise DataError(
            f"non-numeric value {text!r} at row {row_number}, "
            f"column {column_name!r} of {path}"
        ) from None
    if not math.isfinite(value):
        raise DataError(
            f"non-finite value {text!r} at row {row_number}, "
            f"column {column_name!r} of {path}"
        )
    return value


def load_csv(path: str, response_column: str | int, family: str | Family) -> Dataset:
    """Load a headered numeric CSV into a Dataset.

    response_column may be a header name or a 0-based column position. Rows
    are reported 1-based (header excluded) in error messages.
    """
    family = resolve_family(family)
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [name.strip() for name in header]
        if any(not name for name in header):
            raise DataError(f"{path} has an empty header field")
        if isinstance(response_column, int):
            if not 0 <= response_column < len(header):
                raise DataError(
                    f"response column index {response_column} out of range "
                    f"for {len(header)} columns"
                )
            response_idx = response_column
        else:
            if response_column not in header:
                raise DataError(
                    f"response column {response_column!r} not found in {path} "
                    f"(columns: {', '.join(header)})"
                )
            response_idx = header.index(response_column)
        if len(header) < 2:
            raise DataError(f"{path} needs at least one feature column besides the response")
        rows: list[list[float]] = []
        for row_number, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # ignore blank lines
            if len(row) != len(header):
                raise DataError(
                    f"row {row_number} of {path} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            rows.append(
                [
                    _parse_cell(cell, row_number, header[j], path)
                    for j, cell in enumerate(row)
                ]
            )
    if len(rows) < 2:
        raise DataError(f"{path} needs at least 2 data rows")
    table = np.array(rows, dtype=np.float64)
    feature_idx = [j for j in range(len(header)) if j != response_idx]
    return Dataset(
        x=table[:, feature_idx],
        y=table[:, response_idx],
        family=family,
        column_names=tuple(header[j] for j in feature_idx),
        response_name=header[response_idx],
    )


def load_matrix_csv(path: str) -> tuple[np.ndarray, list[str]]:
    """Load a headered numeric CSV as a plain (matrix, column names) pair."""
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [name.strip() for name in header]
        if any(not name for name in header):
            raise DataError(f"{path} has an empty header field")
        rows: list[list[float]] = []
        for row_number, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"row {row_number} of {path} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            rows.append(
                [
                    _parse_cell(cell, row_number, header[j], path)
                    for j, cell in enumerate(row)
                ]
            )
    if not rows:
        raise DataError(f"{path} has no data rows")
    return np.array(rows, dtype=np.float64), header


def write_dataset_csv(d: Dataset, path: str) -> None:
    """Write a Dataset back to CSV (features first, response last, 17 digits)."""
    header = list(d.column_names) + [d.response_name]
    rows = [
        [fmt17(v) for v in d.x[i]] + [fmt17(d.y[i])] for i in range(d.n)
    ]
    write_csv(path, header, rows)


def write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    """Atomically write rows of already-formatted strings as RFC-4180 CSV."""
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buffer.getvalue())
