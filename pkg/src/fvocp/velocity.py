"""Prescribed velocity fields for the convective cases.

The channel flow is an analytic stand-in for a computed flow field: a
divergence-free parabolic profile V = (V_max(t) * 4 x2 (1 - x2), 0) with a
periodic amplitude.  Velocities can also be ingested from a plain-text file
(see `outputs.read_velocity_file`).
"""

from __future__ import annotations

import numpy as np

from .grids import StructuredGrid, cell_centers


def pulse_amplitude(t: float, peak: float, period: float) -> float:
    """Periodic waveform in [0.5, 1] * peak with the given period."""
    return peak * (0.75 + 0.25 * np.cos(2.0 * np.pi * t / period))


def analytic_channel_velocity(grid: StructuredGrid, t: float,
                              peak: float = 0.5,
                              period: float = 0.8) -> np.ndarray:
    """Pulsatile plane-channel profile, zero wall-normal component."""
    if grid.dim != 2:
        raise ValueError("channel velocity requires a 2D grid")
    xy = cell_centers(grid)
    x2 = xy[:, 1] / grid.extent[1]  # normalized transverse coordinate
    vel = np.zeros((grid.n_cells, 2))
    vel[:, 0] = pulse_amplitude(t, peak, period) * 4.0 * x2 * (1.0 - x2)
    return vel


def velocity_frames(case) -> np.ndarray:
    """Velocity at every time level, shape (n_steps + 1, n_cells, dim)."""
    cached = case.cache.get("velocity_frames")
    if cached is not None:
        return cached
    spec = case.velocity
    kind = spec.get("kind", "none")
    n_levels = case.n_steps + 1
    if kind == "none":
        frames = np.zeros((n_levels, case.grid.n_cells, case.grid.dim))
    elif kind == "constant":
        value = np.asarray(spec["value"], dtype=float)
        frames = np.broadcast_to(
            value, (n_levels, case.grid.n_cells, case.grid.dim)).copy()
    elif kind == "analytic":
        frames = np.stack([
            analytic_channel_velocity(case.grid, n * case.dt,
                                      peak=spec.get("peak", 0.5),
                                      period=spec.get("period", 0.8))
            for n in range(n_levels)])
    elif kind == "frames":
        frames = np.asarray(spec["frames"], dtype=float)
        if frames.shape != (n_levels, case.grid.n_cells, case.grid.dim):
            raise ValueError("ingested velocity frames do not match the case "
                             f"discretization: got {frames.shape}")
    else:
        raise ValueError(f"unknown velocity kind {kind!r}")
    case.cache["velocity_frames"] = frames
    return frames
