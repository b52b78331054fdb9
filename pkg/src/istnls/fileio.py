"""Plain-text data files: CSV fields and kernels, JSON reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import ComplexField1D, ComplexField2D, DomainError, Grid1D, Grid2D, KernelOperator

FMT = "%.17g"


def _fmt(v: float) -> str:
    return FMT % v


def _write_rows(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_field_2d(path, grid: Grid2D, values: np.ndarray, names=("x", "y")) -> None:
    """Rows ``x,y,re,im`` in x-outer order; real fields get ``im = 0``."""
    vals = np.asarray(values)
    X, Y = grid.mesh()
    _write_rows(path, [names[0], names[1], "re", "im"],
                [X.ravel(), Y.ravel(), vals.real.ravel(),
                 (vals.imag if np.iscomplexobj(vals) else np.zeros_like(vals)).ravel()])


def write_field_1d(path, field: ComplexField1D) -> None:
    _write_rows(path, ["x", "re", "im"],
                [field.grid.points, field.values.real, field.values.imag])


def write_kernel(path, op: KernelOperator) -> None:
    write_field_2d(path, Grid2D(op.row_grid, op.col_grid), op.kernel, names=("xi", "eta"))


def _grid_from_points(pts: np.ndarray, what: str) -> Grid1D:
    if pts.size < 2:
        raise DomainError(f"{what}: need at least two grid points")
    dx = (pts[-1] - pts[0]) / (pts.size - 1)
    if not np.allclose(np.diff(pts), dx, rtol=1e-9, atol=0):
        raise DomainError(f"{what}: grid is not uniform")
    return Grid1D(pts.size, float(pts[0]), float(dx))


def _read_table(path, ncols: int) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None
    if not rows or len(rows[0]) != ncols:
        raise DomainError(f"{path}: expected a header with {ncols} columns")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != ncols:
        raise DomainError(f"{path}: malformed rows")
    return rows[0], data


def read_field_1d(path) -> ComplexField1D:
    _, data = _read_table(path, 3)
    grid = _grid_from_points(data[:, 0], str(path))
    return ComplexField1D(grid, data[:, 1] + 1j * data[:, 2])


def read_field_2d(path) -> ComplexField2D:
    """Inverse of :func:`write_field_2d` (also reads kernel files)."""
    _, data = _read_table(path, 4)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise DomainError(f"{path}: rows do not form a full tensor grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order]
    grid = Grid2D(_grid_from_points(xs, str(path)), _grid_from_points(ys, str(path)))
    vals = (data[:, 2] + 1j * data[:, 3]).reshape(grid.shape)
    return ComplexField2D(grid, vals)


def read_kernel(path) -> KernelOperator:
    fld = read_field_2d(path)
    return KernelOperator(fld.grid.gx, fld.grid.gy, fld.values)


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None
