import numpy as np
import pytest

from fvocp.grids import (ScalarField, StructuredGrid, Trajectory,
                         cell_centers, l2_norm, relative_l2_error,
                         space_time_integral)


def test_interval_geometry():
    grid = StructuredGrid.interval(1.0, 4)
    assert grid.dim == 1
    assert grid.h == (0.25,)
    assert grid.n_cells == 4
    assert grid.cell_volume == 0.25
    assert grid.patch_names == ("left", "right")
    centers = cell_centers(grid)
    assert np.allclose(centers[:, 0], [0.125, 0.375, 0.625, 0.875])


def test_rectangle_ordering_x_fastest():
    grid = StructuredGrid.rectangle((2.0, 1.0), (4, 2))
    assert grid.index(1, 0) == 1
    assert grid.index(0, 1) == 4
    centers = cell_centers(grid)
    # cell (i=2, j=1) sits at flat index 1*4+2
    assert np.allclose(centers[6], [1.25, 0.75])


def test_patches():
    grid = StructuredGrid.rectangle((2.0, 1.0), (4, 2))
    left = grid.patch("left")
    assert list(left.cells) == [0, 4]
    assert left.face_measure == 0.5
    assert left.measure == 1.0
    assert np.allclose(left.centers[:, 0], 0.0)
    up = grid.patch("up")
    assert list(up.cells) == [4, 5, 6, 7]
    assert up.axis == 1 and up.sign == 1
    with pytest.raises(ValueError):
        grid.patch("front")


def test_grid_validation():
    with pytest.raises(ValueError):
        StructuredGrid((1.0,), (1, 1))
    with pytest.raises(ValueError):
        StructuredGrid((1.0, 1.0, 1.0), (2, 2, 2))
    with pytest.raises(ValueError):
        StructuredGrid((1.0,), (0,))


def test_l2_norm_of_constant():
    grid = StructuredGrid.rectangle((2.0, 1.0), (8, 4))
    field = ScalarField(grid, np.ones(grid.n_cells))
    assert l2_norm(field) == pytest.approx(np.sqrt(2.0))


def test_relative_error_zero_reference_raises():
    grid = StructuredGrid.interval(1.0, 4)
    zero = ScalarField(grid, np.zeros(4))
    with pytest.raises(ZeroDivisionError):
        relative_l2_error(zero, zero)


def test_scalar_field_rejects_bad_values():
    grid = StructuredGrid.interval(1.0, 4)
    with pytest.raises(ValueError):
        ScalarField(grid, np.zeros(5))
    with pytest.raises(ValueError):
        ScalarField(grid, np.array([0.0, np.nan, 0.0, 0.0]))


def test_space_time_integral_of_one():
    grid = StructuredGrid.interval(1.0, 8)
    traj = Trajectory(grid, 0.25, np.ones((5, 8)))
    assert space_time_integral(traj) == pytest.approx(1.0)


def test_space_time_integral_manufactured_energy():
    # integral of e^{-2t} sin^2(2 pi x1) sin^2(2 pi x2) over the unit
    # space-time cylinder is (1 - e^{-2}) / 8
    n = 32
    grid = StructuredGrid.rectangle((1.0, 1.0), (n, n))
    dt = 1.0 / n**2
    centers = cell_centers(grid)
    s = np.sin(2 * np.pi * centers[:, 0]) * np.sin(2 * np.pi * centers[:, 1])
    times = np.arange(n**2 + 1) * dt
    frames = np.exp(-times)[:, None] * s[None, :]
    value = space_time_integral(Trajectory(grid, dt, frames),
                                integrand=lambda f: f**2)
    exact = (1.0 - np.exp(-2.0)) / 8.0
    assert abs(value - exact) / exact < 0.02


def test_trajectory_accessors():
    grid = StructuredGrid.interval(1.0, 4)
    frames = np.arange(12, dtype=float).reshape(3, 4)
    traj = Trajectory(grid, 0.5, frames)
    assert traj.n_steps == 2
    assert traj.t_final == 1.0
    assert np.array_equal(traj.terminal(), frames[2])
    assert np.array_equal(traj.frame(1), frames[1])
