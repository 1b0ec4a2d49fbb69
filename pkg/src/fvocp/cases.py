"""Concrete problem setups: the manufactured verification benchmark, the
light-driven drug-release cases and the catheter transport case.

Application targets are produced by fictitious-data generation: the forward
solver is run with an assigned reference control and its terminal field is
stored as the target, so the optimizer should recover the reference up to the
regularization bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from . import adjoint as adjoint_mod
from . import forward as forward_mod
from . import optimize as optimize_mod
from .controls import Control, zero_control
from .grids import ScalarField, StructuredGrid, cell_centers, \
    relative_l2_error


@dataclass
class CaseDefinition:
    """Everything the solvers need for one optimal control problem."""

    kind: str
    grid: StructuredGrid
    t_final: float
    dt: float
    coefficients: dict
    weights: dict
    control_kind: str
    control_time_constant: bool = False
    control_patch: str = None
    control_face_mask: np.ndarray = None
    catheter_mask: np.ndarray = None
    target: np.ndarray = None
    reference_control: Control = None
    fields: SimpleNamespace = None
    velocity: dict = field(default_factory=lambda: {"kind": "none"})
    initial: dict = field(default_factory=dict)
    boundary_values: dict = field(default_factory=dict)
    bc_overrides: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = round(self.t_final / self.dt)
        if n < 1 or abs(n * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError("t_final must be an integer multiple of dt")
        if self.kind not in ("benchmark", "light_distributed",
                             "light_concentrated", "transport"):
            raise ValueError(f"unknown case kind {self.kind!r}")

    @property
    def n_steps(self) -> int:
        return round(self.t_final / self.dt)


def manufactured_fields(diffusion: float, control_weight: float,
                        tracking_weight: float,
                        t_final: float) -> SimpleNamespace:
    """Closed-form state/adjoint/control triple with matching data.

    The forcing and desired state are derived by substituting the closed-form
    fields into the state and adjoint equations, so all three continuous
    residuals vanish identically.
    """
    two_pi = 2.0 * np.pi
    lap = 8.0 * np.pi**2  # -laplace of sin(2 pi x1) sin(2 pi x2), per unit

    def sines(x):
        x = np.atleast_2d(x)
        return np.sin(two_pi * x[:, 0]) * np.sin(two_pi * x[:, 1])

    def cos_sin(x):
        x = np.atleast_2d(x)
        return np.cos(two_pi * x[:, 0]) * np.sin(two_pi * x[:, 1])

    def state(t, x):
        return np.exp(-t) * sines(x)

    def adjoint(t, x):
        return np.exp(-t) * (t_final - t) * sines(x)

    def control(t, x):
        return -adjoint(t, x) / control_weight

    def forcing(t, x):
        tau = t_final - t
        return np.exp(-t) * sines(x) \
            * (lap * diffusion - 1.0 + tau / control_weight) \
            + two_pi * np.exp(-t) * cos_sin(x)

    def tracking(t, x):
        tau = t_final - t
        return state(t, x) + np.exp(-t) / tracking_weight \
            * (sines(x) * ((t - 1.0 - t_final) - lap * diffusion * tau)
               + two_pi * tau * cos_sin(x))

    return SimpleNamespace(state=state, adjoint=adjoint, control=control,
                           forcing=forcing, tracking=tracking)


def benchmark_case(diffusion: float = 1.0, n: int = 32,
                   control_weight: float = 1.0,
                   tracking_weight: float = 1.0, t_final: float = 1.0,
                   dt: float = None) -> CaseDefinition:
    """Manufactured verification problem on the unit square, V = (1, 0).

    The default time step is dt = h^2 so the first-order time error refines
    at the same second-order rate as the spatial error.
    """
    grid = StructuredGrid.rectangle((1.0, 1.0), (n, n))
    h = 1.0 / n
    if dt is None:
        dt = h * h
    fields = manufactured_fields(diffusion, control_weight, tracking_weight,
                                 t_final)
    case = CaseDefinition(
        kind="benchmark",
        grid=grid,
        t_final=t_final,
        dt=dt,
        coefficients={"diffusion": diffusion},
        weights={"control": control_weight, "tracking": tracking_weight},
        control_kind="distributed",
        fields=fields,
        velocity={"kind": "constant", "value": (1.0, 0.0)},
    )
    case.initial = {"state": fields.state(0.0, cell_centers(grid))}
    return case


def generate_target(case: CaseDefinition, control: Control) -> np.ndarray:
    """Terminal field of a forward run with the assigned control."""
    state = forward_mod.solve_state(case, control)
    if case.kind.startswith("light"):
        return state.free_drug.terminal().copy()
    return state.terminal().copy()


def _bound_drug_initial(grid: StructuredGrid, span: float) -> np.ndarray:
    x1 = cell_centers(grid)[:, 0]
    return np.where(x1 <= span, 1.0, 0.0)


def light_distributed_case(amplitude: float = 5.0,
                           control_weight: float = 1e-6,
                           cells: int = 256, t_final: float = 10.0,
                           dt: float = 0.1, drug_diffusion: float = 4e-4,
                           conversion: float = 4e-3,
                           terminal_weight: float = 1.0,
                           decay_rate: float = 4.0,
                           bound_span: float = 0.25) -> CaseDefinition:
    """1D release driven by a distributed light intensity u(x).

    The target is generated with u(x) = amplitude * exp(-decay_rate * x),
    applied constantly in time.
    """
    grid = StructuredGrid.interval(1.0, cells)
    case = CaseDefinition(
        kind="light_distributed",
        grid=grid,
        t_final=t_final,
        dt=dt,
        coefficients={"drug_diffusion": drug_diffusion,
                      "conversion": conversion},
        weights={"control": control_weight, "terminal": terminal_weight},
        control_kind="distributed",
    )
    x1 = cell_centers(grid)[:, 0]
    case.initial = {"free_drug": np.zeros(grid.n_cells),
                    "bound_drug": _bound_drug_initial(grid, bound_span)}
    case.reference_control = Control(
        "distributed", amplitude * np.exp(-decay_rate * x1),
        time_constant=True)
    case.target = generate_target(case, case.reference_control)
    return case


def light_concentrated_case(dim: int = 1, amplitude: float = 5.0,
                            control_weight: float = 1e-6,
                            cells=None, t_final: float = 10.0,
                            dt: float = 0.1, drug_diffusion: float = 4e-4,
                            light_diffusion: float = 4e-3,
                            absorption: float = 4e-3,
                            conversion: float = 1.5e-2,
                            light_speed: float = 1.0,
                            terminal_weight: float = 1.0,
                            bound_span: float = 0.25) -> CaseDefinition:
    """Release driven by light entering through the left boundary.

    In 1D the control degenerates to a single intensity value (target
    generated with u = amplitude); in 2D it is a boundary profile (target
    generated with u = amplitude * y (1 - y)).
    """
    if dim == 1:
        grid = StructuredGrid.interval(1.0, cells or 256)
        control_kind = "scalar"
    elif dim == 2:
        grid = StructuredGrid.rectangle((1.0, 1.0), cells or (64, 64))
        control_kind = "boundary"
    else:
        raise ValueError("dim must be 1 or 2")
    case = CaseDefinition(
        kind="light_concentrated",
        grid=grid,
        t_final=t_final,
        dt=dt,
        coefficients={"drug_diffusion": drug_diffusion,
                      "light_diffusion": light_diffusion,
                      "absorption": absorption,
                      "conversion": conversion,
                      "light_speed": light_speed},
        weights={"control": control_weight, "terminal": terminal_weight},
        control_kind=control_kind,
        control_time_constant=True,
        control_patch="left",
    )
    case.initial = {"free_drug": np.zeros(grid.n_cells),
                    "bound_drug": _bound_drug_initial(grid, bound_span),
                    "intensity": np.zeros(grid.n_cells)}
    if dim == 1:
        case.reference_control = Control("scalar", np.asarray(amplitude),
                                         time_constant=True, patch="left")
    else:
        y_face = grid.patch("left").centers[:, 1]
        case.reference_control = Control(
            "boundary", amplitude * y_face * (1.0 - y_face),
            time_constant=True, patch="left")
    case.target = generate_target(case, case.reference_control)
    return case


def transport_case(cells=(64, 32), extent=(2.0, 1.0),
                   diffusion: float = 5e-3, t_final: float = 0.8,
                   dt: float = 0.01, control_weight: float = 1e-6,
                   terminal_weight: float = 1.0, peak: float = 0.5,
                   period: float = 0.8, drug_span=(0.4, 0.6),
                   reference_value: float = 1.0,
                   velocity: dict = None) -> CaseDefinition:
    """Drug transport in a pulsatile channel flow.

    The drug enters through a catheter patch on the left boundary (faces whose
    centers fall inside `drug_span` along the transverse direction); the rest
    of the left boundary is the inlet.  The target is generated with the
    constant injection value `reference_value`.
    """
    grid = StructuredGrid.rectangle(extent, cells)
    if velocity is None:
        velocity = {"kind": "analytic", "peak": peak, "period": period}
    left = grid.patch("left")
    centers = left.centers[:, 1]
    mask = (centers >= drug_span[0]) & (centers <= drug_span[1])
    if not np.any(mask):
        raise ValueError("drug patch does not contain any boundary face")
    case = CaseDefinition(
        kind="transport",
        grid=grid,
        t_final=t_final,
        dt=dt,
        coefficients={"diffusion": diffusion},
        weights={"control": control_weight, "terminal": terminal_weight},
        control_kind="scalar",
        control_time_constant=True,
        control_patch="left",
        control_face_mask=mask,
        velocity=velocity,
    )
    case.initial = {"state": np.zeros(grid.n_cells)}
    case.boundary_values = {"inlet": 0.0, "catheter": 0.0}
    case.reference_control = Control("scalar", np.asarray(reference_value),
                                     time_constant=True, patch="left")
    case.target = generate_target(case, case.reference_control)
    return case


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    iterations: int
    error_state: float
    rate_state: float  # nan on the coarsest mesh
    error_adjoint: float
    rate_adjoint: float


def benchmark_errors(case: CaseDefinition, result) -> tuple:
    """Relative L2 errors of the optimal state at t = T_f and of the adjoint
    at the end of its backward march (t = 0)."""
    centers = cell_centers(case.grid)
    exact_state = ScalarField(case.grid,
                              case.fields.state(case.t_final, centers))
    err_state = relative_l2_error(
        ScalarField(case.grid, result.state.terminal()), exact_state)
    adj = adjoint_mod.solve_adjoint_benchmark(case, result.state)
    exact_adj = ScalarField(case.grid, case.fields.adjoint(0.0, centers))
    err_adj = relative_l2_error(
        ScalarField(case.grid, adj.tracking.frames[0]), exact_adj)
    return err_state, err_adj


def run_convergence_study(diffusion: float = 1.0,
                          mesh_cells=(4, 8, 16, 32), tol: float = 1e-6,
                          max_iter: int = 60) -> list:
    """Solve the benchmark on a mesh sequence with dt = h^2 and report
    errors and observed orders (rate = log(E_i / E_{i+1}) / log(h_i / h_{i+1}))."""
    rows = []
    prev = None
    for n in mesh_cells:
        case = benchmark_case(diffusion=diffusion, n=n)
        result = optimize_mod.steepest_descent(case, tol=tol,
                                               max_iter=max_iter)
        err_state, err_adj = benchmark_errors(case, result)
        h = 1.0 / n
        if prev is None:
            rate_state = rate_adj = float("nan")
        else:
            ratio = np.log(prev.h / h)
            rate_state = float(np.log(prev.error_state / err_state) / ratio)
            rate_adj = float(np.log(prev.error_adjoint / err_adj) / ratio)
        row = ConvergenceRow(h, result.iterations, err_state, rate_state,
                             err_adj, rate_adj)
        rows.append(row)
        prev = row
    return rows
