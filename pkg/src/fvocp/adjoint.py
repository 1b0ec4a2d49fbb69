"""Adjoint (multiplier) solvers, marched forward in reflected time.

Each adjoint equation is posed backward on (T_f, 0].  Substituting the
reflected time tau = T_f - t turns it into a forward march that reuses the
implicit-Euler assembly of the state solvers with the velocity reversed.
Reflected step m solves the multiplier at forward level n = N - m and samples
states (and controls) at that same level, pairing with the right-endpoint
time quadrature of the objective.  Terminal conditions are assigned exactly
at level N before the march starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fv
from .controls import Control
from .forward import LightState, _benchmark_frames, _free_drug_bc, \
    _intensity_bc, _stepper
from .grids import Trajectory, cell_centers
from .velocity import velocity_frames


@dataclass(frozen=True)
class AdjointSolution:
    """Multipliers stored on the forward time grid.

    `tracking` pairs with the tracked concentration (the state of the
    benchmark and transport problems, the free drug of the light problems);
    `bound_drug` and `intensity` pair with the corresponding extra states of
    the light problems.
    """

    tracking: Trajectory
    bound_drug: Trajectory = None
    intensity: Trajectory = None


def _tracking_frames(case):
    """Desired-state frames of the benchmark, cached."""
    cached = case.cache.get("tracking_frames")
    if cached is not None:
        return cached
    centers = cell_centers(case.grid)
    times = np.arange(case.n_steps + 1) * case.dt
    frames = np.stack([case.fields.tracking(t, centers) for t in times])
    case.cache["tracking_frames"] = frames
    return frames


def solve_adjoint_benchmark(case, state: Trajectory) -> AdjointSolution:
    grid, dt, n_steps = case.grid, case.dt, case.n_steps
    desired = _tracking_frames(case)
    vel = -velocity_frames(case)[0]
    bc = fv.BoundaryCondition(
        {name: fv.dirichlet(0.0) for name in grid.patch_names})
    spec = fv.OperatorSpec(kappa=case.coefficients["diffusion"], velocity=vel)
    stepper = _stepper(case, "benchmark_adjoint_stepper",
                       lambda: fv.ImplicitStepper(grid, spec, bc, dt))
    weight = case.weights["tracking"]
    frames = np.empty((n_steps + 1, grid.n_cells))
    frames[n_steps] = 0.0
    for m in range(1, n_steps + 1):
        n = n_steps - m
        source = weight * (state.frames[n] - desired[n])
        frames[n] = stepper.step(frames[n + 1], source=source)
    return AdjointSolution(Trajectory(grid, dt, frames))


def _terminal_mismatch(case, terminal: np.ndarray) -> np.ndarray:
    if case.target is None:
        raise ValueError("case has no target field")
    return case.weights["terminal"] * (terminal - case.target)


def _control_level_frames(case, control: Control, n: int) -> np.ndarray:
    """Control sample for reflected steps; level 0 falls back to level 1."""
    return np.asarray(control.level(max(n, 1)), dtype=float)


def solve_adjoint_light_distributed(case, state: LightState,
                                    control: Control) -> AdjointSolution:
    grid, dt, n_steps = case.grid, case.dt, case.n_steps
    rate = case.coefficients["conversion"]
    stepper = _stepper(case, "cf_adjoint_stepper", lambda: fv.ImplicitStepper(
        grid, fv.OperatorSpec(kappa=case.coefficients["drug_diffusion"]),
        _adjoint_bc(_free_drug_bc(case)), dt))
    adj_free = np.empty((n_steps + 1, grid.n_cells))
    adj_bound = np.empty_like(adj_free)
    adj_free[n_steps] = _terminal_mismatch(case, state.free_drug.terminal())
    adj_bound[n_steps] = 0.0
    for m in range(1, n_steps + 1):
        n = n_steps - m
        adj_free[n] = stepper.step(adj_free[n + 1])
        exposure = rate * _control_level_frames(case, control, n)
        adj_bound[n] = (adj_bound[n + 1] + dt * exposure * adj_free[n]) \
            / (1.0 + dt * exposure)
    return AdjointSolution(Trajectory(grid, dt, adj_free),
                           Trajectory(grid, dt, adj_bound))


def solve_adjoint_light_concentrated(case, state: LightState) -> AdjointSolution:
    grid, dt, n_steps = case.grid, case.dt, case.n_steps
    co = case.coefficients
    rate = co["conversion"]
    cf_stepper = _stepper(case, "cf_adjoint_stepper",
                          lambda: fv.ImplicitStepper(
                              grid,
                              fv.OperatorSpec(kappa=co["drug_diffusion"]),
                              _adjoint_bc(_free_drug_bc(case)), dt))
    i_spec = fv.OperatorSpec(kappa=co["light_diffusion"],
                             reaction=co["absorption"],
                             sigma=1.0 / co["light_speed"])
    i_stepper = _stepper(case, "intensity_adjoint_stepper",
                         lambda: fv.ImplicitStepper(
                             grid, i_spec, _adjoint_bc(_intensity_bc(case)),
                             dt))
    adj_free = np.empty((n_steps + 1, grid.n_cells))
    adj_bound = np.empty_like(adj_free)
    adj_int = np.empty_like(adj_free)
    adj_free[n_steps] = _terminal_mismatch(case, state.free_drug.terminal())
    adj_bound[n_steps] = 0.0
    adj_int[n_steps] = 0.0
    for m in range(1, n_steps + 1):
        n = n_steps - m
        adj_free[n] = cf_stepper.step(adj_free[n + 1])
        exposure = rate * state.intensity.frames[n]
        adj_bound[n] = (adj_bound[n + 1] + dt * exposure * adj_free[n]) \
            / (1.0 + dt * exposure)
        source = rate * state.bound_drug.frames[n] * (adj_free[n] - adj_bound[n])
        adj_int[n] = i_stepper.step(adj_int[n + 1], source=source)
    return AdjointSolution(Trajectory(grid, dt, adj_free),
                           Trajectory(grid, dt, adj_bound),
                           Trajectory(grid, dt, adj_int))


def _adjoint_bc(state_bc: fv.BoundaryCondition) -> fv.BoundaryCondition:
    """Homogeneous counterpart of a state boundary condition: Dirichlet-0
    where the state is Dirichlet, zero Neumann elsewhere."""
    patches = {}
    for name, pbc in state_bc.patches.items():
        if pbc.kind == "dirichlet":
            patches[name] = fv.dirichlet(0.0)
        else:
            patches[name] = fv.neumann(0.0)
    return fv.BoundaryCondition(patches)


def _transport_adjoint_steppers(case):
    steppers = case.cache.get("transport_adjoint_steppers")
    if steppers is not None:
        return steppers
    grid, dt = case.grid, case.dt
    eps = case.coefficients["diffusion"]
    frames = velocity_frames(case)
    steppers = [None] * (case.n_steps + 1)
    for n in range(case.n_steps):
        vel = frames[n]
        patches = {"left": fv.dirichlet(0.0)}
        for name in ("right", "down", "up"):
            patch = grid.patch(name)
            vn = vel[patch.cells, patch.axis] * patch.sign
            patches[name] = fv.robin(vn, eps)
        steppers[n] = fv.ImplicitStepper(
            grid, fv.OperatorSpec(kappa=eps, velocity=-vel),
            fv.BoundaryCondition(patches), dt)
    case.cache["transport_adjoint_steppers"] = steppers
    return steppers


def solve_adjoint_transport(case, state: Trajectory) -> AdjointSolution:
    """Reflected transport adjoint with the outflow Robin condition
    lambda * V.n + eps * grad(lambda).n = 0 on the outlet and walls."""
    grid, dt, n_steps = case.grid, case.dt, case.n_steps
    steppers = _transport_adjoint_steppers(case)
    frames = np.empty((n_steps + 1, grid.n_cells))
    frames[n_steps] = _terminal_mismatch(case, state.terminal())
    for m in range(1, n_steps + 1):
        n = n_steps - m
        frames[n] = steppers[n].step(frames[n + 1])
    return AdjointSolution(Trajectory(grid, dt, frames))


def solve_adjoint(case, state, control: Control) -> AdjointSolution:
    if case.kind == "benchmark":
        return solve_adjoint_benchmark(case, state)
    if case.kind == "light_distributed":
        return solve_adjoint_light_distributed(case, state, control)
    if case.kind == "light_concentrated":
        return solve_adjoint_light_concentrated(case, state)
    if case.kind == "transport":
        return solve_adjoint_transport(case, state)
    raise ValueError(f"unknown case kind {case.kind!r}")
