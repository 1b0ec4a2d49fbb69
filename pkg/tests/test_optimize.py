import numpy as np
import pytest

from fvocp.cases import (benchmark_case, light_concentrated_case,
                         transport_case)
from fvocp.controls import Control, entry_measure, zero_control
from fvocp.optimize import (STOP_LINE_SEARCH, STOP_TOLERANCE, check_gradient,
                            control_recovery_error, evaluate_objective,
                            fd_gradient_oracle, gradient, steepest_descent)


def test_fd_oracle_exact_on_quadratic_cost():
    # with zero tracking weight the objective is the explicit quadratic
    # control energy, so the FD oracle equals beta1 * u * measure exactly
    case = benchmark_case(n=4, tracking_weight=1.0)
    case.weights["tracking"] = 0.0
    rng = np.random.default_rng(1)
    control = Control("distributed",
                      rng.normal(size=(case.n_steps, case.grid.n_cells)))
    entry = (3, 7)
    fd = fd_gradient_oracle(case, control, entry, delta=1e-4)
    expected = case.weights["control"] * control.values[entry] \
        * entry_measure(case, control, entry)
    assert fd == pytest.approx(expected, abs=1e-8)


def test_check_gradient_benchmark_small():
    case = benchmark_case(n=8)
    rows = check_gradient(case, zero_control(case), n_entries=5, delta=1e-6)
    assert max(r[3] for r in rows) <= 5e-2


def test_objective_breakdown_consistency():
    case = light_concentrated_case(dim=1, cells=32, t_final=1.0, dt=0.25)
    control = Control("scalar", np.asarray(3.0), time_constant=True,
                      patch="left")
    from fvocp.forward import solve_state
    obj = evaluate_objective(case, solve_state(case, control), control)
    assert obj.total == pytest.approx(obj.control_cost + obj.tracking_cost)
    # control energy of a constant scalar trace: beta1/2 * u^2 * T * |patch|
    expected = 0.5 * case.weights["control"] * 9.0 * case.t_final
    assert obj.control_cost == pytest.approx(expected)


def test_objective_requires_target():
    case = light_concentrated_case(dim=1, cells=16, t_final=1.0, dt=0.25)
    case.target = None
    control = zero_control(case)
    from fvocp.forward import solve_state
    with pytest.raises(ValueError):
        evaluate_objective(case, solve_state(case, control), control)


def test_descent_monotone_and_converges():
    case = transport_case(cells=(32, 16), dt=0.02)
    result = steepest_descent(case, tol=1e-6, max_iter=40)
    assert result.stop_reason in (STOP_TOLERANCE, STOP_LINE_SEARCH)
    totals = result.history[:, 0]
    assert np.all(np.diff(totals) <= 0.0)
    assert abs(float(result.control.values) - 1.0) < 0.05


def test_descent_fixed_step_mode():
    case = light_concentrated_case(dim=1, cells=16, t_final=1.0, dt=0.25)
    result = steepest_descent(case, tol=1e-12, max_iter=3, alpha0=0.5,
                              step_mode="fixed")
    assert result.iterations == 3
    assert result.history.shape == (3, 4)
    with pytest.raises(ValueError):
        steepest_descent(case, step_mode="newton")


def test_gradient_shape_matches_control():
    case = light_concentrated_case(dim=2, cells=(8, 8), t_final=1.0, dt=0.25)
    control = zero_control(case)
    from fvocp.adjoint import solve_adjoint
    from fvocp.forward import solve_state
    state = solve_state(case, control)
    adj = solve_adjoint(case, state, control)
    grad = gradient(case, state, adj, control)
    assert grad.values.shape == control.values.shape
    assert grad.kind == control.kind
    assert grad.time_constant == control.time_constant


def test_recovery_error_scalar():
    case = transport_case(cells=(16, 8))
    control = zero_control(case).with_values(np.asarray(0.98))
    assert control_recovery_error(case, control, 1.0) == pytest.approx(0.02)
    with pytest.raises(ZeroDivisionError):
        control_recovery_error(case, control, 0.0)
