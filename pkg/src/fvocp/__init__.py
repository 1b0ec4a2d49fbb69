"""Finite-volume solvers for time-dependent PDE-constrained optimal control.

The package solves quadratic tracking problems constrained by
advection-diffusion(-reaction) systems on uniform structured grids with the
adjoint (Lagrangian) method: implicit-Euler finite-volume marches for the
state and the time-reflected adjoint, and steepest descent on the optimality
residual.
"""

from .cases import (CaseDefinition, benchmark_case, generate_target,
                    light_concentrated_case, light_distributed_case,
                    manufactured_fields, run_convergence_study,
                    transport_case)
from .controls import Control, control_inner, control_norm, zero_control
from .fv import (BoundaryCondition, ImplicitStepper, LinearSystem,
                 OperatorSpec, PatchBC, SolverError, assemble_step,
                 boundary_gradient, dirichlet, neumann, robin, solve_linear)
from .grids import (BoundaryTrace, ScalarField, StructuredGrid, Trajectory,
                    VectorField, cell_centers, l2_norm, relative_l2_error,
                    space_time_integral)
from .optimize import (ObjectiveBreakdown, OptimizationResult,
                       check_gradient, control_recovery_error,
                       evaluate_objective, fd_gradient_oracle, gradient,
                       steepest_descent)
from .adjoint import AdjointSolution, solve_adjoint
from .forward import LightState, solve_state
from .velocity import analytic_channel_velocity
from .config import ConfigError, RunConfig, build_case, load_config, \
    parse_config
from .outputs import read_velocity_file, write_outputs, write_velocity_file

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
