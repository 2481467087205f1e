"""Paired-sample containers and CSV import/export."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import as_points


class SampleFormatError(ValueError):
    """A sample file does not match the expected CSV layout."""


@dataclass(frozen=True)
class JointSample:
    """Paired covariate/response observations: xs is (n, dx), ys is (n, dy)."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = as_points(self.xs)
        ys = as_points(self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if xs.shape[0] != ys.shape[0]:
            raise ValueError(f"row count mismatch: {xs.shape[0]} xs vs {ys.shape[0]} ys")
        if xs.shape[0] < 2:
            raise ValueError(f"a joint sample needs at least 2 rows, got {xs.shape[0]}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("sample contains non-finite entries")

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def dx(self) -> int:
        return self.xs.shape[1]

    @property
    def dy(self) -> int:
        return self.ys.shape[1]

    def rows(self, idx) -> "JointSample":
        return JointSample(self.xs[idx], self.ys[idx])


@dataclass(frozen=True)
class TestLocations:
    """Covariate-space points at which the conditional fit is probed."""

    __test__ = False  # not a pytest class, despite the name

    vs: np.ndarray
    jitter_applied: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        vs = as_points(self.vs)
        object.__setattr__(self, "vs", vs)
        if vs.shape[0] < 1:
            raise ValueError("need at least one test location")
        if not np.all(np.isfinite(vs)):
            raise ValueError("test locations contain non-finite entries")

    @property
    def count(self) -> int:
        return self.vs.shape[0]

    @property
    def dx(self) -> int:
        return self.vs.shape[1]


def _expected_header(dx: int, dy: int) -> list[str]:
    return [f"x{i}" for i in range(1, dx + 1)] + [f"y{i}" for i in range(1, dy + 1)]


def load_sample(path, dx: int, dy: int) -> JointSample:
    """Read a joint sample from a CSV file with header x1..x{dx},y1..y{dy}."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SampleFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        expected = _expected_header(dx, dy)
        for col in expected:
            if col not in header:
                raise SampleFormatError(f"{path}: missing column {col!r}")
        positions = [header.index(col) for col in expected]
        rows = []
        for rownum, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) < len(header):
                raise SampleFormatError(f"{path}: row {rownum} has {len(record)} cells, expected {len(header)}")
            values = []
            for col, pos in zip(expected, positions):
                cell = record[pos].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise SampleFormatError(
                        f"{path}: row {rownum}, column {col!r}: not a number: {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise SampleFormatError(f"{path}: row {rownum}, column {col!r}: non-finite value {cell!r}")
                values.append(value)
            rows.append(values)
    if len(rows) < 2:
        raise SampleFormatError(f"{path}: need at least 2 data rows, got {len(rows)}")
    arr = np.asarray(rows, dtype=float)
    return JointSample(arr[:, :dx], arr[:, dx:])


def save_sample(path, sample: JointSample) -> None:
    """Write a joint sample as CSV; values round-trip exactly through load_sample."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(sample.dx, sample.dy))
        for xrow, yrow in zip(sample.xs, sample.ys):
            writer.writerow([format(v, ".17g") for v in xrow] + [format(v, ".17g") for v in yrow])
