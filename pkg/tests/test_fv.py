import numpy as np
import pytest

from fvocp import fv
from fvocp.grids import StructuredGrid, cell_centers


def _interval_bc(left, right):
    return fv.BoundaryCondition({"left": left, "right": right})


def test_dirichlet_ghost_elimination_coefficients():
    # 1D pure diffusion, n=4, h=0.25, kappa=1, dt=1: hand-derived stencil.
    # interior coupling kappa/h^2 = 16; boundary cells get an extra 2*kappa/h^2
    grid = StructuredGrid.interval(1.0, 4)
    spec = fv.OperatorSpec(kappa=1.0)
    bc = _interval_bc(fv.dirichlet(0.0), fv.dirichlet(0.0))
    system = fv.assemble_step(grid, spec, bc, np.zeros(4), dt=1.0)
    dense = system.matrix.toarray()
    assert dense[1, 1] == pytest.approx(1.0 + 32.0)
    assert dense[0, 0] == pytest.approx(1.0 + 16.0 + 32.0)
    assert dense[0, 1] == pytest.approx(-16.0)
    assert dense[1, 0] == pytest.approx(-16.0)


def test_dirichlet_rhs_coefficient_includes_convection():
    # rhs coefficient on a Dirichlet face is 2 kappa/h^2 - vn/h
    grid = StructuredGrid.interval(1.0, 4)
    vel = np.full((4, 1), 2.0)
    spec = fv.OperatorSpec(kappa=1.0, velocity=vel)
    bc = _interval_bc(fv.dirichlet(3.0), fv.dirichlet(0.0))
    system = fv.assemble_step(grid, spec, bc, np.zeros(4), dt=1e12)
    # left patch: outward normal -x, vn = -2, coefficient 32 + 8 = 40
    assert system.rhs[0] == pytest.approx(40.0 * 3.0)


def test_constant_preservation_neumann():
    grid = StructuredGrid.rectangle((1.0, 1.0), (6, 5))
    spec = fv.OperatorSpec(kappa=0.3)
    bc = fv.BoundaryCondition.uniform(grid, fv.neumann(0.0))
    stepper = fv.ImplicitStepper(grid, spec, bc, dt=0.1)
    state = np.full(grid.n_cells, 4.2)
    for _ in range(5):
        state = stepper.step(state)
    assert np.allclose(state, 4.2, atol=1e-12)


def test_mass_conservation_neumann():
    rng = np.random.default_rng(3)
    grid = StructuredGrid.rectangle((1.0, 1.0), (8, 8))
    spec = fv.OperatorSpec(kappa=0.1)
    bc = fv.BoundaryCondition.uniform(grid, fv.neumann(0.0))
    stepper = fv.ImplicitStepper(grid, spec, bc, dt=0.05)
    state = rng.random(grid.n_cells)
    mass0 = state.sum() * grid.cell_volume
    for _ in range(20):
        state = stepper.step(state)
    assert abs(state.sum() * grid.cell_volume - mass0) <= 1e-10


def test_steady_dirichlet_diffusion_profile():
    # steady diffusion between Dirichlet values is linear in x; the cell
    # values of a linear profile are exact for the second-order stencil
    grid = StructuredGrid.interval(1.0, 16)
    spec = fv.OperatorSpec(kappa=1.0)
    bc = _interval_bc(fv.dirichlet(1.0), fv.dirichlet(3.0))
    stepper = fv.ImplicitStepper(grid, spec, bc, dt=10.0)
    state = np.zeros(16)
    for _ in range(200):
        state = stepper.step(state)
    x = cell_centers(grid)[:, 0]
    assert np.allclose(state, 1.0 + 2.0 * x, atol=1e-9)


def test_robin_steady_state_flux_balance():
    # at steady state the outflow through the Robin patch balances the
    # Dirichlet inflow exactly (discrete conservation of the face fluxes)
    grid = StructuredGrid.interval(1.0, 8)
    vel = np.full((8, 1), 1.0)
    spec = fv.OperatorSpec(kappa=0.05, velocity=vel)
    right = grid.patch("right")
    vn = vel[right.cells, 0] * right.sign
    bc = _interval_bc(fv.dirichlet(1.0), fv.robin(vn, 0.05))
    stepper = fv.ImplicitStepper(grid, spec, bc, dt=0.5)
    state = np.zeros(8)
    for _ in range(400):
        state = stepper.step(state)
    flux = fv.boundary_flux(grid, spec, bc, state)
    assert flux["right"] > 0.0
    assert flux["left"] + flux["right"] == pytest.approx(0.0, abs=1e-9)


def test_boundary_gradient_linear_field_exact():
    grid = StructuredGrid.interval(1.0, 8)
    x = cell_centers(grid)[:, 0]
    values = 2.0 + 3.0 * x
    grad = fv.boundary_gradient(grid, values, "right", fv.dirichlet(5.0))
    assert grad[0] == pytest.approx(3.0)
    grad = fv.boundary_gradient(grid, values, "left", fv.dirichlet(2.0))
    assert grad[0] == pytest.approx(-3.0)  # outward normal points along -x


def test_solve_linear_matches_dense():
    rng = np.random.default_rng(7)
    grid = StructuredGrid.rectangle((1.0, 1.0), (5, 4))
    vel = rng.normal(size=(grid.n_cells, 2)) * 0.1
    spec = fv.OperatorSpec(kappa=0.2, velocity=vel, reaction=0.5)
    bc = fv.BoundaryCondition.uniform(grid, fv.dirichlet(1.0))
    system = fv.assemble_step(grid, spec, bc, rng.random(grid.n_cells), 0.1)
    x = fv.solve_linear(system, tol=1e-12)
    expected = np.linalg.solve(system.matrix.toarray(), system.rhs)
    assert np.allclose(x, expected, atol=1e-9)


def test_solve_linear_1d_matches_dense():
    rng = np.random.default_rng(11)
    grid = StructuredGrid.interval(2.0, 9)
    spec = fv.OperatorSpec(kappa=0.7)
    bc = _interval_bc(fv.neumann(0.0), fv.dirichlet(2.0))
    system = fv.assemble_step(grid, spec, bc, rng.random(9), 0.2)
    x = fv.solve_linear(system)
    expected = np.linalg.solve(system.matrix.toarray(), system.rhs)
    assert np.allclose(x, expected, atol=1e-10)


def test_validation_errors():
    grid = StructuredGrid.interval(1.0, 4)
    with pytest.raises(ValueError):
        fv.PatchBC("periodic")
    with pytest.raises(ValueError):
        fv.robin(1.0, 0.0)
    bad = fv.BoundaryCondition({"left": fv.neumann(0.0)})
    with pytest.raises(ValueError):
        fv.assemble_step(grid, fv.OperatorSpec(kappa=1.0), bad,
                         np.zeros(4), 0.1)
    with pytest.raises(ValueError):
        fv.assemble_step(grid, fv.OperatorSpec(kappa=1.0),
                         fv.BoundaryCondition.uniform(grid, fv.neumann()),
                         np.zeros(5), 0.1)
