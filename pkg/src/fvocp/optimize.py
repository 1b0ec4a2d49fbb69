"""Objective evaluation, adjoint gradients and steepest descent.

The gradient returned by `gradient` is the Riesz representative of the
objective derivative in the discrete L2 space of the control (see
`controls`), i.e. the pointwise optimality residual.  For scalar-trace
controls the per-face residual is averaged over the patch (and over time for
time-constant controls), which is the Riesz representative in the space of
constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fv
from .adjoint import AdjointSolution, solve_adjoint
from .controls import Control, control_inner, control_norm, entry_measure, \
    zero_control
from .forward import solve_state, transport_left_values
from .velocity import velocity_frames

STOP_TOLERANCE = "tolerance met"
STOP_MAX_ITER = "max iterations"
STOP_LINE_SEARCH = "line-search failure"


@dataclass(frozen=True)
class ObjectiveBreakdown:
    total: float
    control_cost: float
    tracking_cost: float


@dataclass(frozen=True)
class OptimizationResult:
    control: Control
    state: object
    iterations: int
    stop_reason: str
    history: np.ndarray  # rows of (J, J_control, J_tracking, gradient norm)


def _tracked_trajectory(case, state):
    return state.free_drug if case.kind.startswith("light") else state


def evaluate_objective(case, state, control: Control) -> ObjectiveBreakdown:
    """Quadratic cost: control energy plus tracking/terminal mismatch."""
    control_cost = 0.5 * case.weights["control"] \
        * control_inner(case, control, control)
    vol = case.grid.cell_volume
    if case.kind == "benchmark":
        from .adjoint import _tracking_frames
        desired = _tracking_frames(case)
        mismatch = state.frames[1:] - desired[1:]
        tracking = 0.5 * case.weights["tracking"] * case.dt * vol \
            * float(np.sum(mismatch**2))
    else:
        if case.target is None:
            raise ValueError("case has no target field")
        terminal = _tracked_trajectory(case, state).terminal()
        tracking = 0.5 * case.weights["terminal"] * vol \
            * float(np.sum((terminal - case.target)**2))
    return ObjectiveBreakdown(control_cost + tracking, control_cost, tracking)


def _residual_levels(case, state, adj: AdjointSolution,
                     control: Control) -> np.ndarray:
    """Optimality residual per time level (levels 1..N) and control entry."""
    w = case.weights["control"]
    n_steps = case.n_steps
    if case.kind == "benchmark":
        res = np.empty((n_steps, case.grid.n_cells))
        for n in range(1, n_steps + 1):
            res[n - 1] = w * control.level(n) + adj.tracking.frames[n]
        return res
    if case.kind == "light_distributed":
        rate = case.coefficients["conversion"]
        res = np.empty((n_steps, case.grid.n_cells))
        for n in range(1, n_steps + 1):
            coupling = rate * state.bound_drug.frames[n] \
                * (adj.tracking.frames[n] - adj.bound_drug.frames[n])
            res[n - 1] = w * control.level(n) + coupling
        return res
    if case.kind == "light_concentrated":
        kappa = case.coefficients["light_diffusion"]
        patch = case.grid.patch(case.control_patch)
        res = np.empty((n_steps, patch.n_faces))
        pbc = fv.dirichlet(0.0)
        for n in range(1, n_steps + 1):
            grad = fv.boundary_gradient(case.grid, adj.intensity.frames[n],
                                        case.control_patch, pbc)
            res[n - 1] = w * np.broadcast_to(
                np.asarray(control.level(n), dtype=float),
                (patch.n_faces,)) - kappa * grad
        return res
    if case.kind == "transport":
        kappa = case.coefficients["diffusion"]
        mask = case.control_face_mask
        n_faces = int(np.count_nonzero(mask))
        res = np.empty((n_steps, n_faces))
        pbc = fv.dirichlet(0.0)
        # the adjoint trace is zero on the control patch, so the convective
        # part of the optimality condition vanishes identically
        for n in range(1, n_steps + 1):
            grad = fv.boundary_gradient(case.grid, adj.tracking.frames[n],
                                        case.control_patch, pbc)[mask]
            res[n - 1] = w * np.broadcast_to(
                np.asarray(control.level(n), dtype=float),
                (n_faces,)) - kappa * grad
        return res
    raise ValueError(f"unknown case kind {case.kind!r}")


def gradient(case, state, adj: AdjointSolution, control: Control) -> Control:
    """Riesz-representative gradient in the shape of the control."""
    res = _residual_levels(case, state, adj, control)
    if control.kind == "scalar":
        res = res.mean(axis=1)
    if control.time_constant:
        values = res.mean(axis=0)  # uniform dt: time average
        if control.kind == "scalar":
            values = np.asarray(float(values))
    else:
        values = res
    return control.with_values(values)


def fd_gradient_oracle(case, control: Control, entry, delta: float = 1e-6,
                       objective=None) -> float:
    """Central-difference derivative of the objective w.r.t. one stored
    control entry (a raw partial derivative, not a Riesz representative)."""
    def total(ctrl):
        if objective is not None:
            return objective(ctrl)
        return evaluate_objective(case, solve_state(case, ctrl), ctrl).total

    plus = control.values.copy()
    plus[entry] += delta
    minus = control.values.copy()
    minus[entry] -= delta
    return (total(control.with_values(plus))
            - total(control.with_values(minus))) / (2.0 * delta)


def check_gradient(case, control: Control, n_entries: int = 10,
                   delta: float = 1e-6, seed: int = 0):
    """Compare the adjoint gradient against central differences on randomly
    chosen control entries.  Returns rows (entry, adjoint, fd, rel_mismatch)."""
    state = solve_state(case, control)
    adj = solve_adjoint(case, state, control)
    grad = gradient(case, state, adj, control)
    rng = np.random.default_rng(seed)
    shape = control.values.shape
    sampled = []
    for _ in range(n_entries):
        if shape == ():
            entry = ()
        else:
            entry = tuple(int(rng.integers(s)) for s in shape)
        adjoint_raw = float(np.asarray(grad.values)[entry]) \
            * entry_measure(case, control, entry)
        fd = fd_gradient_oracle(case, control, entry, delta)
        sampled.append((entry, adjoint_raw, fd))
    # mismatch relative to the gradient scale of the sample, so near-zero
    # entries do not blow up the ratio
    scale = max(max(abs(fd) for _, _, fd in sampled), 1e-14)
    return [(entry, adjoint_raw, fd, abs(adjoint_raw - fd) / scale)
            for entry, adjoint_raw, fd in sampled]


def _line_search(case, control, direction, j0, gg, alpha_init,
                 armijo_c=1e-4, max_halvings=40):
    """Armijo backtracking with one quadratic-interpolation trial step.

    Returns (alpha, J_new) or None if no acceptable step was found.
    """
    def trial(alpha):
        candidate = control.shifted(direction, alpha)
        return evaluate_objective(case, solve_state(case, candidate),
                                  candidate).total

    def acceptable(alpha, j_new):
        return j_new <= j0 - armijo_c * alpha * gg

    alpha = alpha_init
    j_a = trial(alpha)
    best = (alpha, j_a) if acceptable(alpha, j_a) else None
    # exact minimizer of the quadratic through (0, j0), slope -gg, (alpha, j_a)
    denom = 2.0 * (j_a - j0 + gg * alpha)
    if denom > 0.0:
        alpha_q = gg * alpha**2 / denom
        if 1e-6 * alpha < alpha_q < 1e6 * alpha:
            j_q = trial(alpha_q)
            if acceptable(alpha_q, j_q) and (best is None or j_q < best[1]):
                best = (alpha_q, j_q)
    if best is not None:
        return best
    for _ in range(max_halvings):
        alpha *= 0.5
        j_a = trial(alpha)
        if acceptable(alpha, j_a):
            return (alpha, j_a)
    return None


def steepest_descent(case, control: Control = None, tol: float = 1e-6,
                     max_iter: int = 100, alpha0: float = 1.0,
                     step_mode: str = "quadratic",
                     armijo_c: float = 1e-4) -> OptimizationResult:
    """Adjoint-based steepest descent from a zero (or given) initial control.

    Each iteration solves the state, the adjoint, forms the optimality
    residual and updates the control along its negative.  `step_mode`
    "quadratic" uses Armijo backtracking with a quadratic-interpolation trial
    step (the objective is then non-increasing); "fixed" always applies
    `alpha0`.
    """
    if step_mode not in ("quadratic", "fixed"):
        raise ValueError(f"unknown step mode {step_mode!r}")
    if control is None:
        control = zero_control(case)
    alpha_seed = alpha0
    history = []
    stop_reason = STOP_MAX_ITER
    state = None
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        state = solve_state(case, control)
        obj = evaluate_objective(case, state, control)
        adj = solve_adjoint(case, state, control)
        grad = gradient(case, state, adj, control)
        gnorm = control_norm(case, grad)
        history.append((obj.total, obj.control_cost, obj.tracking_cost,
                        gnorm))
        if gnorm < tol:
            stop_reason = STOP_TOLERANCE
            break
        if step_mode == "fixed":
            control = control.shifted(grad, alpha0)
            state = None
            continue
        gg = gnorm**2
        found = _line_search(case, control, grad, obj.total, gg, alpha_seed,
                             armijo_c)
        if found is None:
            stop_reason = STOP_LINE_SEARCH
            break
        alpha, j_new = found
        if obj.total - j_new <= 1e-15 * max(abs(obj.total), 1.0):
            # the residual-based direction can no longer produce a decrease
            # beyond rounding: the iterate has reached the consistency floor
            # of the discretized gradient
            stop_reason = STOP_LINE_SEARCH
            break
        alpha_seed = 2.0 * alpha
        control = control.shifted(grad, alpha)
        state = None
    if state is None:
        state = solve_state(case, control)
    return OptimizationResult(control, state, iterations, stop_reason,
                              np.array(history))


def control_recovery_error(case, control: Control, reference,
                           support=None) -> float:
    """Relative error of the recovered control against a reference.

    Scalar controls compare single values; field controls compare in the
    weighted L2 norm of the control space, optionally restricted to a boolean
    `support` mask over entries.  Time-varying controls are averaged in time
    first.
    """
    values = control.values if control.time_constant \
        else control.values.mean(axis=0)
    if control.kind == "scalar":
        ref = float(reference)
        if ref == 0.0:
            raise ZeroDivisionError("reference control is zero")
        return abs(float(values) - ref) / abs(ref)
    from .controls import control_support
    weights, _ = control_support(case)
    ref = np.broadcast_to(np.asarray(reference, dtype=float), values.shape)
    if support is None:
        support = np.ones(values.shape, dtype=bool)
    denom = np.sqrt(np.sum(weights[support] * ref[support]**2))
    if denom == 0.0:
        raise ZeroDivisionError("reference control has zero norm")
    err = np.sqrt(np.sum(weights[support] * (values - ref)[support]**2))
    return float(err / denom)
