"""Forward (state) solvers for the four model problems.

All marches use implicit Euler: both convection and diffusion are treated
implicitly, and in the drug-release systems the bound-drug depletion is
integrated with the implicit per-cell update

    c_b(new) = c_b(old) / (1 + rate * dt)

which keeps the bound concentration positive and non-increasing exactly for a
non-negative driving intensity.  Within a step of the concentrated-light
system the sequence is: intensity, then bound drug, then free drug.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fv
from .controls import Control
from .grids import StructuredGrid, Trajectory, cell_centers
from .velocity import velocity_frames


@dataclass(frozen=True)
class LightState:
    """Trajectories of the drug-release systems."""

    free_drug: Trajectory
    bound_drug: Trajectory
    intensity: Trajectory = None


def _stepper(case, key, build):
    stepper = case.cache.get(key)
    if stepper is None:
        stepper = build()
        case.cache[key] = stepper
    return stepper


def _free_drug_bc(case) -> fv.BoundaryCondition:
    override = case.bc_overrides.get("free_drug")
    if override is not None:
        return override
    patches = {name: fv.neumann(0.0) for name in case.grid.patch_names}
    patches["right"] = fv.dirichlet(case.boundary_values.get("sink", 0.0))
    return fv.BoundaryCondition(patches)


def _intensity_bc(case) -> fv.BoundaryCondition:
    override = case.bc_overrides.get("intensity")
    if override is not None:
        return override
    patches = {name: fv.neumann(0.0) for name in case.grid.patch_names}
    patches["left"] = fv.dirichlet(0.0)  # value supplied per step
    return fv.BoundaryCondition(patches)


def _benchmark_frames(case):
    """Forcing and boundary values of the manufactured benchmark, cached."""
    cached = case.cache.get("benchmark_frames")
    if cached is not None:
        return cached
    fields = case.fields
    centers = cell_centers(case.grid)
    times = np.arange(case.n_steps + 1) * case.dt
    forcing = np.stack([fields.forcing(t, centers) for t in times])
    bc_values = {}
    for name in case.grid.patch_names:
        patch = case.grid.patch(name)
        bc_values[name] = np.stack([fields.state(t, patch.centers)
                                    for t in times])
    cached = (forcing, bc_values)
    case.cache["benchmark_frames"] = cached
    return cached


def solve_state_benchmark(case, control: Control) -> Trajectory:
    """March the controlled advection-diffusion state forward in time."""
    grid, dt = case.grid, case.dt
    forcing, bc_values = _benchmark_frames(case)
    vel = velocity_frames(case)[0]  # constant in time for this case
    bc = case.bc_overrides.get("state") or fv.BoundaryCondition(
        {name: fv.dirichlet(0.0) for name in grid.patch_names})
    spec = fv.OperatorSpec(kappa=case.coefficients["diffusion"], velocity=vel)
    stepper = _stepper(case, "benchmark_state_stepper",
                       lambda: fv.ImplicitStepper(grid, spec, bc, dt))
    frames = np.empty((case.n_steps + 1, grid.n_cells))
    frames[0] = case.initial["state"]
    for n in range(1, case.n_steps + 1):
        source = forcing[n] + control.level(n)
        values = {name: vals[n] for name, vals in bc_values.items()}
        frames[n] = stepper.step(frames[n - 1], source=source,
                                 bc_values=values)
    return Trajectory(grid, dt, frames)


def _deplete(bound_prev: np.ndarray, rate: np.ndarray, dt: float) -> np.ndarray:
    denom = 1.0 + rate * dt
    if np.any(denom <= 0.0):
        raise ValueError("negative depletion rate made a step non-positive")
    return bound_prev / denom


def solve_state_light_distributed(case, control: Control) -> LightState:
    """Distributed light: per-cell depletion feeding free-drug diffusion."""
    grid, dt = case.grid, case.dt
    diff = case.coefficients["drug_diffusion"]
    rate = case.coefficients["conversion"]
    stepper = _stepper(case, "cf_stepper", lambda: fv.ImplicitStepper(
        grid, fv.OperatorSpec(kappa=diff), _free_drug_bc(case), dt))
    free = np.empty((case.n_steps + 1, grid.n_cells))
    bound = np.empty_like(free)
    free[0] = case.initial["free_drug"]
    bound[0] = case.initial["bound_drug"]
    for n in range(1, case.n_steps + 1):
        exposure = np.broadcast_to(np.asarray(control.level(n), dtype=float),
                                   (grid.n_cells,))
        bound[n] = _deplete(bound[n - 1], rate * exposure, dt)
        free[n] = stepper.step(free[n - 1], source=rate * bound[n] * exposure)
    return LightState(Trajectory(grid, dt, free), Trajectory(grid, dt, bound))


def solve_state_light_concentrated(case, control: Control) -> LightState:
    """Concentrated light: boundary-driven intensity, then depletion, then
    free-drug diffusion."""
    grid, dt = case.grid, case.dt
    co = case.coefficients
    rate = co["conversion"]
    i_spec = fv.OperatorSpec(kappa=co["light_diffusion"],
                             reaction=co["absorption"],
                             sigma=1.0 / co["light_speed"])
    i_stepper = _stepper(case, "intensity_stepper", lambda: fv.ImplicitStepper(
        grid, i_spec, _intensity_bc(case), dt))
    cf_stepper = _stepper(case, "cf_stepper", lambda: fv.ImplicitStepper(
        grid, fv.OperatorSpec(kappa=co["drug_diffusion"]),
        _free_drug_bc(case), dt))
    intensity = np.empty((case.n_steps + 1, grid.n_cells))
    free = np.empty_like(intensity)
    bound = np.empty_like(intensity)
    intensity[0] = case.initial["intensity"]
    free[0] = case.initial["free_drug"]
    bound[0] = case.initial["bound_drug"]
    for n in range(1, case.n_steps + 1):
        intensity[n] = i_stepper.step(intensity[n - 1],
                                      bc_values={"left": control.level(n)})
        bound[n] = _deplete(bound[n - 1], rate * intensity[n], dt)
        free[n] = cf_stepper.step(free[n - 1],
                                  source=rate * bound[n] * intensity[n])
    return LightState(Trajectory(grid, dt, free), Trajectory(grid, dt, bound),
                      Trajectory(grid, dt, intensity))


def transport_left_values(case, control_level) -> np.ndarray:
    """Dirichlet trace on the left boundary: inlet value with the control on
    the catheter (drug) faces."""
    patch = case.grid.patch("left")
    values = np.full(patch.n_faces, case.boundary_values.get("inlet", 0.0))
    if case.catheter_mask is not None:
        values[case.catheter_mask] = case.boundary_values.get("catheter", 0.0)
    values[case.control_face_mask] = control_level
    return values


def _transport_state_steppers(case):
    steppers = case.cache.get("transport_state_steppers")
    if steppers is not None:
        return steppers
    grid, dt = case.grid, case.dt
    eps = case.coefficients["diffusion"]
    bc = case.bc_overrides.get("state") or fv.BoundaryCondition({
        "left": fv.dirichlet(0.0),
        "right": fv.neumann(0.0),
        "down": fv.neumann(0.0),
        "up": fv.neumann(0.0),
    })
    frames = velocity_frames(case)
    steppers = [None] + [
        fv.ImplicitStepper(grid, fv.OperatorSpec(kappa=eps, velocity=frames[n]),
                           bc, dt)
        for n in range(1, case.n_steps + 1)]
    case.cache["transport_state_steppers"] = steppers
    return steppers


def solve_state_transport(case, control: Control) -> Trajectory:
    """Drug transport in a prescribed pulsatile channel flow."""
    grid, dt = case.grid, case.dt
    steppers = _transport_state_steppers(case)
    frames = np.empty((case.n_steps + 1, grid.n_cells))
    frames[0] = case.initial["state"]
    for n in range(1, case.n_steps + 1):
        left = transport_left_values(case, control.level(n))
        frames[n] = steppers[n].step(frames[n - 1], bc_values={"left": left})
    return Trajectory(grid, dt, frames)


_SOLVERS = {
    "benchmark": solve_state_benchmark,
    "light_distributed": solve_state_light_distributed,
    "light_concentrated": solve_state_light_concentrated,
    "transport": solve_state_transport,
}


def solve_state(case, control: Control):
    return _SOLVERS[case.kind](case, control)
