"""Uniform grids and the field containers every solver shares.

A :class:`GridGeometry` is an axis-aligned box split into equal cells;
field values live at cell centers.  Scalar fields hold one value per cell
(densities, the environmental field), vector fields hold one d-vector per
cell (the aggregation drift).  Geometry objects are immutable and hashable
so derived quantities (FFT wavenumbers, tabulated interaction kernels) can
be cached against them.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import GeometryMismatch


@dataclass(frozen=True)
class GridGeometry:
    """Axis-aligned uniform grid covering ``[origin, origin + extent]``.

    Cell ``i`` along an axis is centered at ``origin + (i + 1/2) * spacing``.
    At least 2 cells per axis are required; supported dimensions are 1-3.
    """

    origin: tuple[float, ...]
    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "extent", tuple(float(x) for x in self.extent))
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        d = len(self.cells)
        if not (1 <= d <= 3):
            raise ValueError(f"supported dimensions are 1..3, got {d}")
        if len(self.origin) != d or len(self.extent) != d:
            raise ValueError("origin, extent and cells must have equal length")
        if any(e <= 0 for e in self.extent):
            raise ValueError("extent must be positive per axis")
        if any(n < 2 for n in self.cells):
            raise ValueError("need at least 2 cells per axis")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + e for o, e in zip(self.origin, self.extent))

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis (read-only array)."""
        return _axis_centers(self, axis)

    def center_mesh(self) -> tuple[np.ndarray, ...]:
        """Meshgrid (``indexing='ij'``) of cell-center coordinates."""
        return np.meshgrid(*(self.axis_centers(a) for a in range(self.dim)), indexing="ij")


@lru_cache(maxsize=None)
def _axis_centers(geometry: GridGeometry, axis: int) -> np.ndarray:
    o = geometry.origin[axis]
    dx = geometry.spacing[axis]
    c = o + (np.arange(geometry.cells[axis]) + 0.5) * dx
    c.setflags(write=False)
    return c


def _check_values(geometry: GridGeometry, values: np.ndarray, components: int | None):
    expected = tuple(geometry.cells) if components is None else tuple(geometry.cells) + (components,)
    if values.shape != expected:
        raise ValueError(f"values shape {values.shape} does not match grid {expected}")


@dataclass
class ScalarField:
    """One float per cell on a :class:`GridGeometry`."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        _check_values(self.geometry, self.values, None)

    def mass(self) -> float:
        """Integral of the field: sum of values times cell volume."""
        return float(self.values.sum() * self.geometry.cell_volume)

    def copy(self):
        return type(self)(self.geometry, self.values.copy())


class DensityField(ScalarField):
    """Scalar field holding a probability density (unit mass, nonnegative)."""


@dataclass
class VectorField:
    """One d-vector per cell; component index is the trailing axis."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        _check_values(self.geometry, self.values, self.geometry.dim)

    def component(self, axis: int) -> np.ndarray:
        return self.values[..., axis]

    def sup_norm(self) -> float:
        """Largest Euclidean vector magnitude over all cells."""
        return float(np.sqrt((self.values**2).sum(axis=-1)).max())

    def copy(self):
        return VectorField(self.geometry, self.values.copy())


def require_same_geometry(*fields) -> GridGeometry:
    geo = fields[0].geometry
    for f in fields[1:]:
        if f.geometry != geo:
            raise GeometryMismatch(f"fields live on different grids: {geo} vs {f.geometry}")
    return geo


def l2_norm(field) -> float:
    """L2 norm of a scalar or vector field: sqrt(sum of squares x cell volume)."""
    return float(np.sqrt((field.values**2).sum() * field.geometry.cell_volume))


# ---------------------------------------------------------------------------
# serialization: flat little-endian f64 binary + JSON sidecar, and CSV export

_KIND_NAMES = {ScalarField: "scalar", DensityField: "density", VectorField: "vector"}
_KIND_TYPES = {v: k for k, v in _KIND_NAMES.items()}


def save_field(field, basepath) -> Path:
    """Write ``<basepath>.f64`` (row-major little-endian float64) and ``<basepath>.json``."""
    base = Path(basepath)
    data = np.ascontiguousarray(field.values, dtype="<f8")
    base.with_suffix(base.suffix + ".f64").write_bytes(data.tobytes())
    sidecar = {
        "kind": _KIND_NAMES[type(field)],
        "origin": list(field.geometry.origin),
        "extent": list(field.geometry.extent),
        "cells": list(field.geometry.cells),
        "components": field.geometry.dim if isinstance(field, VectorField) else 1,
        "dtype": "<f8",
        "order": "C",
    }
    base.with_suffix(base.suffix + ".json").write_text(json.dumps(sidecar, indent=1))
    return base


def load_field(basepath):
    """Load a field written by :func:`save_field`."""
    base = Path(basepath)
    meta = json.loads(base.with_suffix(base.suffix + ".json").read_text())
    geo = GridGeometry(tuple(meta["origin"]), tuple(meta["extent"]), tuple(meta["cells"]))
    raw = np.frombuffer(base.with_suffix(base.suffix + ".f64").read_bytes(), dtype="<f8")
    shape = tuple(geo.cells)
    if meta["kind"] == "vector":
        shape = shape + (geo.dim,)
    return _KIND_TYPES[meta["kind"]](geo, raw.reshape(shape).astype(np.float64))


def field_to_csv(field, path) -> Path:
    """Export cell centers and values as CSV (columns x1..xd then value(s))."""
    path = Path(path)
    geo = field.geometry
    mesh = geo.center_mesh()
    coords = [m.ravel() for m in mesh]
    if isinstance(field, VectorField):
        vals = [field.values[..., a].ravel() for a in range(geo.dim)]
        header = [f"x{a + 1}" for a in range(geo.dim)] + [f"v{a + 1}" for a in range(geo.dim)]
    else:
        vals = [field.values.ravel()]
        header = [f"x{a + 1}" for a in range(geo.dim)] + ["value"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*coords, *vals):
            writer.writerow([repr(float(v)) for v in row])
    return path
