"""Uniform structured grids with cell-centered fields and time trajectories.

Cells are stored in row-major order with the x index running fastest:
in 2D the flat index of cell (i, j) is j * nx + i.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

PATCHES_1D = ("left", "right")
PATCHES_2D = ("left", "right", "down", "up")


@dataclass(frozen=True)
class Patch:
    """One side of the domain boundary: the faces and their adjacent cells."""

    name: str
    axis: int
    sign: int  # outward normal points along sign * axis
    cells: np.ndarray  # flat index of the cell adjacent to each face
    face_measure: float  # length of one face (1.0 in 1D)
    centers: np.ndarray  # face center coordinates, shape (n_faces, dim)

    @property
    def n_faces(self) -> int:
        return len(self.cells)

    @property
    def measure(self) -> float:
        return self.n_faces * self.face_measure


@dataclass(frozen=True)
class StructuredGrid:
    """Axis-aligned uniform grid on [0, extent_1] x ... with given cell counts."""

    extent: tuple
    cells: tuple

    def __post_init__(self):
        if len(self.extent) != len(self.cells):
            raise ValueError("extent and cells must have the same dimension")
        if len(self.cells) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if any(n < 1 for n in self.cells):
            raise ValueError("cell counts must be positive")
        if any(e <= 0 for e in self.extent):
            raise ValueError("extents must be positive")

    @classmethod
    def interval(cls, length: float, n: int) -> "StructuredGrid":
        return cls((float(length),), (int(n),))

    @classmethod
    def rectangle(cls, extent, cells) -> "StructuredGrid":
        ex, ey = extent
        nx, ny = cells
        return cls((float(ex), float(ey)), (int(nx), int(ny)))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> tuple:
        return tuple(e / n for e, n in zip(self.extent, self.cells))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def patch_names(self) -> tuple:
        return PATCHES_1D if self.dim == 1 else PATCHES_2D

    def index(self, i: int, j: int = 0) -> int:
        return j * self.cells[0] + i

    def patch(self, name: str) -> Patch:
        return _patch(self, name)


@functools.lru_cache(maxsize=None)
def cell_centers(grid: StructuredGrid) -> np.ndarray:
    """Coordinates of all cell centers, shape (n_cells, dim)."""
    h = grid.h
    axes = [(np.arange(n) + 0.5) * h[k] for k, n in enumerate(grid.cells)]
    if grid.dim == 1:
        return axes[0][:, None]
    xx, yy = np.meshgrid(axes[0], axes[1])  # y varies over rows, x fastest
    return np.column_stack([xx.ravel(), yy.ravel()])


@functools.lru_cache(maxsize=None)
def _patch(grid: StructuredGrid, name: str) -> Patch:
    if name not in grid.patch_names:
        raise ValueError(f"unknown patch {name!r} for a {grid.dim}D grid")
    h = grid.h
    if grid.dim == 1:
        n = grid.cells[0]
        if name == "left":
            return Patch(name, 0, -1, np.array([0]), 1.0, np.array([[0.0]]))
        return Patch(name, 0, +1, np.array([n - 1]), 1.0,
                     np.array([[grid.extent[0]]]))
    nx, ny = grid.cells
    if name == "left":
        cells = np.arange(ny) * nx
        centers = np.column_stack([np.zeros(ny), (np.arange(ny) + 0.5) * h[1]])
        return Patch(name, 0, -1, cells, h[1], centers)
    if name == "right":
        cells = np.arange(ny) * nx + (nx - 1)
        centers = np.column_stack([np.full(ny, grid.extent[0]),
                                   (np.arange(ny) + 0.5) * h[1]])
        return Patch(name, 0, +1, cells, h[1], centers)
    if name == "down":
        cells = np.arange(nx)
        centers = np.column_stack([(np.arange(nx) + 0.5) * h[0], np.zeros(nx)])
        return Patch(name, 1, -1, cells, h[0], centers)
    cells = (ny - 1) * nx + np.arange(nx)
    centers = np.column_stack([(np.arange(nx) + 0.5) * h[0],
                               np.full(nx, grid.extent[1])])
    return Patch(name, 1, +1, cells, h[0], centers)


@dataclass(frozen=True)
class ScalarField:
    """One value per cell."""

    grid: StructuredGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class VectorField:
    """One dim-vector per cell."""

    grid: StructuredGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells, self.grid.dim):
            raise ValueError("vector field shape mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Trajectory:
    """Time series of cell fields: frames[n] is the field at t = n * dt."""

    grid: StructuredGrid
    dt: float
    frames: np.ndarray  # (n_steps + 1, n_cells) or (n_steps + 1, n_cells, dim)

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=float)
        if f.ndim not in (2, 3) or f.shape[1] != self.grid.n_cells:
            raise ValueError("trajectory frame shape mismatch")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "frames", f)

    @property
    def n_steps(self) -> int:
        return self.frames.shape[0] - 1

    @property
    def t_final(self) -> float:
        return self.n_steps * self.dt

    def frame(self, n: int) -> np.ndarray:
        return self.frames[n]

    def terminal(self) -> np.ndarray:
        return self.frames[-1]


@dataclass(frozen=True)
class BoundaryTrace:
    """Per-face values on one patch at every time level."""

    grid: StructuredGrid
    patch: str
    dt: float
    values: np.ndarray  # (n_levels, n_faces)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n_faces = self.grid.patch(self.patch).n_faces
        if v.ndim != 2 or v.shape[1] != n_faces:
            raise ValueError("boundary trace shape mismatch")
        object.__setattr__(self, "values", v)


def l2_norm(field: ScalarField) -> float:
    """Cell-volume weighted discrete L2 norm."""
    return float(np.sqrt(np.sum(field.values**2) * field.grid.cell_volume))


def relative_l2_error(numeric: ScalarField, exact: ScalarField) -> float:
    """||numeric - exact||_L2 / ||exact||_L2 on matching grids."""
    if numeric.grid != exact.grid:
        raise ValueError("fields live on different grids")
    denom = l2_norm(exact)
    if denom == 0.0:
        raise ZeroDivisionError("reference field has zero norm")
    diff = ScalarField(numeric.grid, numeric.values - exact.values)
    return l2_norm(diff) / denom


def space_time_integral(traj: Trajectory, integrand=None) -> float:
    """Rectangle-rule (right endpoint) integral over space and time.

    `integrand` maps a frame array to a per-cell array; identity by default.
    The level-0 frame does not contribute.
    """
    vol = traj.grid.cell_volume
    total = 0.0
    for n in range(1, traj.frames.shape[0]):
        frame = traj.frames[n]
        vals = frame if integrand is None else integrand(frame)
        total += np.sum(vals)
    return float(total * vol * traj.dt)
