"""Result persistence: CSV tables, legacy-VTK export and velocity files.

All numbers are written with 17 significant digits so repeated runs with the
same configuration produce bit-identical files and values round-trip through
text exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .grids import cell_centers
from .optimize import OptimizationResult, control_recovery_error

_FMT = "%.17g"


def _fmt(value) -> str:
    return _FMT % float(value)


def _write_csv(path, header, rows):
    with open(path, "w") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(cell if isinstance(cell, str) else _fmt(cell)
                                   for cell in row) + "\n")


def write_history_csv(path, history: np.ndarray):
    rows = [(str(i), h[0], h[1], h[2], h[3]) for i, h in enumerate(history)]
    _write_csv(path, ("iter", "J", "J_u", "J_target", "grad_norm"), rows)


def _coord_header(ndim: int):
    return ("x",) if ndim == 1 else ("x", "y")


def write_field_csv(path, grid, values: np.ndarray, name: str = "value"):
    centers = cell_centers(grid)
    header = _coord_header(grid.dim) + (name,)
    rows = [tuple(center) + (v,) for center, v in zip(centers, values)]
    _write_csv(path, header, rows)


def read_field_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)[:, -1]


def write_control_csv(path, case, control):
    """Control table; layout follows the control's kind and time dependence."""
    if control.kind == "distributed":
        coords = cell_centers(case.grid)
    elif control.kind == "boundary":
        coords = case.grid.patch(control.patch).centers
    else:
        coords = None
    coord_header = () if coords is None else _coord_header(coords.shape[1])
    if control.time_constant:
        header = coord_header + ("u",)
        values = np.atleast_1d(np.asarray(control.values, dtype=float))
        if coords is None:
            rows = [(v,) for v in values]
        else:
            rows = [tuple(c[:len(coord_header)]) + (v,)
                    for c, v in zip(coords, values)]
    else:
        header = ("t",) + coord_header + ("u",)
        rows = []
        for m, frame in enumerate(np.atleast_1d(control.values)):
            t = (m + 1) * case.dt
            frame = np.atleast_1d(np.asarray(frame, dtype=float))
            if coords is None:
                rows.append((t, float(frame)))
            else:
                rows.extend((t,) + tuple(c[:len(coord_header)]) + (v,)
                            for c, v in zip(coords, frame))
    _write_csv(path, header, rows)


def write_vtk(path, grid, values: np.ndarray, name: str = "value",
              title: str = "fvocp field"):
    """Legacy ASCII STRUCTURED_POINTS file with one cell-centered scalar."""
    if grid.dim != 2:
        raise ValueError("VTK export is provided for 2D grids only")
    nx, ny = grid.cells
    hx = grid.extent[0] / nx
    hy = grid.extent[1] / ny
    with open(path, "w") as handle:
        handle.write("# vtk DataFile Version 3.0\n")
        handle.write(title + "\n")
        handle.write("ASCII\n")
        handle.write("DATASET STRUCTURED_POINTS\n")
        handle.write(f"DIMENSIONS {nx} {ny} 1\n")
        handle.write(f"ORIGIN {_fmt(0.5 * hx)} {_fmt(0.5 * hy)} 0\n")
        handle.write(f"SPACING {_fmt(hx)} {_fmt(hy)} 1\n")
        handle.write(f"POINT_DATA {nx * ny}\n")
        handle.write(f"SCALARS {name} double\n")
        handle.write("LOOKUP_TABLE default\n")
        for v in values:
            handle.write(_fmt(v) + "\n")


def _tracked_terminal(case, state) -> np.ndarray:
    if case.kind.startswith("light"):
        return state.free_drug.terminal()
    return state.terminal()


def write_outputs(result: OptimizationResult, case, directory,
                  formats=("csv",)) -> list:
    """Persist one optimization run; returns the list of files written."""
    os.makedirs(directory, exist_ok=True)
    written = []

    def target_path(name):
        path = os.path.join(directory, name)
        written.append(path)
        return path

    write_history_csv(target_path("history.csv"), result.history)
    write_control_csv(target_path("control_final.csv"), case, result.control)
    terminal = _tracked_terminal(case, result.state)
    write_field_csv(target_path("state_final.csv"), case.grid, terminal)
    if "vtk" in formats and case.grid.dim == 2:
        write_vtk(target_path("state_final.vtk"), case.grid, terminal)
    last = result.history[-1]
    header = ["iterations", "stop_reason", "J", "J_u", "J_target",
              "grad_norm"]
    row = [str(result.iterations), result.stop_reason, last[0], last[1],
           last[2], last[3]]
    if case.reference_control is not None:
        reference = case.reference_control.values
        header.append("recovery_error")
        row.append(control_recovery_error(case, result.control, reference))
    _write_csv(target_path("summary.csv"), header, [row])
    return written


def write_convergence_csv(path, rows):
    header = ("h", "iterations", "E_y", "rate_y", "E_lambda", "rate_lambda")
    _write_csv(path, header,
               [(r.h, str(r.iterations), r.error_state, r.rate_state,
                 r.error_adjoint, r.rate_adjoint) for r in rows])


def read_velocity_file(path):
    """Read a velocity trajectory: header "nx ny nt dt", then nt+1 blocks of
    nx*ny lines "Vx Vy" in row-major x-fastest cell order.  Returns
    (frames of shape (nt+1, nx*ny, 2), dt)."""
    with open(path) as handle:
        tokens = handle.read().split()
    if len(tokens) < 4:
        raise ValueError("velocity file has no header")
    nx, ny, nt = int(tokens[0]), int(tokens[1]), int(tokens[2])
    dt = float(tokens[3])
    n_cells = nx * ny
    expected = 4 + 2 * n_cells * (nt + 1)
    if len(tokens) != expected:
        raise ValueError(f"velocity file has {len(tokens)} tokens, "
                         f"expected {expected} from its header")
    data = np.array(tokens[4:], dtype=float)
    if not np.all(np.isfinite(data)):
        raise ValueError("velocity file contains non-finite values")
    return data.reshape(nt + 1, n_cells, 2), dt


def write_velocity_file(path, frames: np.ndarray, cells, dt: float):
    """Inverse of read_velocity_file (mainly for tests and data preparation)."""
    nx, ny = cells
    frames = np.asarray(frames, dtype=float)
    with open(path, "w") as handle:
        handle.write(f"{nx} {ny} {frames.shape[0] - 1} {_fmt(dt)}\n")
        for frame in frames:
            for vx, vy in frame:
                handle.write(f"{_fmt(vx)} {_fmt(vy)}\n")
