import numpy as np
import pytest

from fvocp.adjoint import solve_adjoint
from fvocp.cases import (benchmark_case, light_concentrated_case,
                         light_distributed_case, transport_case)
from fvocp.controls import Control, zero_control
from fvocp.forward import solve_state
from fvocp.grids import ScalarField, cell_centers, relative_l2_error


def test_benchmark_terminal_condition_exact():
    case = benchmark_case(n=8)
    state = solve_state(case, zero_control(case))
    adj = solve_adjoint(case, state, zero_control(case))
    assert np.all(adj.tracking.terminal() == 0.0)


def test_light_terminal_conditions_exact():
    case = light_distributed_case(cells=16, t_final=1.0, dt=0.25)
    control = Control("distributed", np.full((case.n_steps, 16), 2.0))
    state = solve_state(case, control)
    adj = solve_adjoint(case, state, control)
    expected = case.weights["terminal"] \
        * (state.free_drug.terminal() - case.target)
    assert np.array_equal(adj.tracking.terminal(), expected)
    assert np.all(adj.bound_drug.terminal() == 0.0)

    case = light_concentrated_case(dim=1, cells=16, t_final=1.0, dt=0.25)
    control = Control("scalar", np.asarray(4.0), time_constant=True,
                      patch="left")
    state = solve_state(case, control)
    adj = solve_adjoint(case, state, control)
    expected = case.weights["terminal"] \
        * (state.free_drug.terminal() - case.target)
    assert np.array_equal(adj.tracking.terminal(), expected)
    assert np.all(adj.bound_drug.terminal() == 0.0)
    assert np.all(adj.intensity.terminal() == 0.0)


def test_transport_terminal_condition_exact():
    case = transport_case(cells=(16, 8))
    control = zero_control(case).with_values(np.asarray(0.5))
    state = solve_state(case, control)
    adj = solve_adjoint(case, state, control)
    expected = case.weights["terminal"] * (state.terminal() - case.target)
    assert np.array_equal(adj.tracking.terminal(), expected)


def test_perfect_target_gives_zero_adjoints():
    case = light_concentrated_case(dim=1, cells=16, t_final=1.0, dt=0.25)
    control = case.reference_control
    state = solve_state(case, control)
    adj = solve_adjoint(case, state, control)
    # the target was generated by this very forward solve
    assert np.allclose(adj.tracking.frames, 0.0, atol=1e-14)
    assert np.allclose(adj.bound_drug.frames, 0.0, atol=1e-14)
    assert np.allclose(adj.intensity.frames, 0.0, atol=1e-14)


def test_benchmark_adjoint_tracks_manufactured_solution():
    case = benchmark_case(n=16)
    centers = cell_centers(case.grid)
    times = np.arange(case.n_steps + 1) * case.dt
    frames = np.stack([case.fields.state(t, centers) for t in times])
    from fvocp.grids import Trajectory
    state = Trajectory(case.grid, case.dt, frames)
    adj = solve_adjoint(case, state, zero_control(case))
    exact = ScalarField(case.grid, case.fields.adjoint(0.0, centers))
    err = relative_l2_error(ScalarField(case.grid, adj.tracking.frames[0]),
                            exact)
    assert err < 0.05


def test_unknown_case_kind_rejected():
    case = benchmark_case(n=4)
    state = solve_state(case, zero_control(case))
    case.kind = "mystery"
    with pytest.raises(ValueError):
        solve_adjoint(case, state, zero_control(case))
