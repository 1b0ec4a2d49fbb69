"""Command-line driver.

Subcommands: `run` (solve one optimal control problem), `forward` (state solve
with an assigned control, e.g. for target generation), `convergence`
(benchmark mesh study), `check-gradient` (adjoint vs finite differences) and
`list-presets`.  Exit codes: 0 success, 1 solver failure, 2 configuration or
usage error.  The output directory resolves as OCP_OUT env var, then --out,
then the config's [output] section, then ./out.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources

import numpy as np

from . import cases as cases_mod
from . import outputs
from .config import ConfigError, RunConfig, build_case, load_config, \
    parse_config
from .controls import zero_control
from .forward import solve_state
from .fv import SolverError
from .optimize import check_gradient, evaluate_objective, steepest_descent


def _preset_names():
    root = resources.files("fvocp").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".yaml"))


def _load(path_or_preset: str) -> RunConfig:
    if os.path.exists(path_or_preset):
        return parse_config(path_or_preset)
    name = path_or_preset
    if not name.endswith(".yaml"):
        name += ".yaml"
    preset = resources.files("fvocp").joinpath("presets").joinpath(name)
    if preset.is_file():
        return load_config(preset.read_text())
    raise ConfigError([f"[case]: no such config file or preset "
                       f"{path_or_preset!r}"])


def _out_dir(args, config: RunConfig) -> str:
    env = os.environ.get("OCP_OUT")
    if env:
        return env
    if getattr(args, "out", None):
        return args.out
    return config.output.get("directory", "out")


def _initial_control(case, config: RunConfig):
    control = zero_control(case)
    initial = config.control.get("initial")
    if initial:
        control = control.with_values(control.values + float(initial))
    return control


def _cmd_run(args) -> int:
    config = _load(args.config)
    case = build_case(config)
    opt = config.optimizer
    result = steepest_descent(
        case, control=_initial_control(case, config),
        tol=float(opt.get("tol", 1e-6)),
        max_iter=int(opt.get("max_iter", 100)),
        alpha0=float(opt.get("alpha0", 1.0)),
        step_mode=opt.get("step_mode", "quadratic"))
    directory = _out_dir(args, config)
    formats = config.output.get("formats", ["csv", "vtk"])
    written = outputs.write_outputs(result, case, directory, formats)
    last = result.history[-1]
    print(f"{case.kind}: {result.iterations} iterations ({result.stop_reason}), "
          f"J={last[0]:.6e} J_u={last[1]:.6e} J_target={last[2]:.6e} "
          f"grad_norm={last[3]:.3e}")
    for path in written:
        print("wrote", path)
    return 0


def _cmd_forward(args) -> int:
    config = _load(args.config)
    case = build_case(config)
    control = zero_control(case).with_values(
        np.zeros(zero_control(case).values.shape) + float(args.control))
    state = solve_state(case, control)
    terminal = state.free_drug.terminal() if case.kind.startswith("light") \
        else state.terminal()
    directory = _out_dir(args, config)
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "target.csv")
    outputs.write_field_csv(path, case.grid, terminal, name="target")
    print("wrote", path)
    if case.grid.dim == 2 and "vtk" in config.output.get("formats", []):
        vtk = os.path.join(directory, "target.vtk")
        outputs.write_vtk(vtk, case.grid, terminal, name="target")
        print("wrote", vtk)
    return 0


def _cmd_convergence(args) -> int:
    meshes = tuple(int(v) for v in args.meshes.split(","))
    config = _load(args.config) if args.config else None
    eps = args.eps
    if eps is None:
        eps = (config.coefficients.get("diffusion", 1.0) if config else 1.0)
    rows = cases_mod.run_convergence_study(diffusion=float(eps),
                                           mesh_cells=meshes)
    directory = args.out or (config.output.get("directory", "out")
                             if config else "out")
    directory = os.environ.get("OCP_OUT") or directory
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "convergence.csv")
    outputs.write_convergence_csv(path, rows)
    print(f"{'h':>10} {'N':>4} {'E_y':>12} {'rate':>6} {'E_lambda':>12} "
          f"{'rate':>6}")
    for r in rows:
        print(f"{r.h:10.5f} {r.iterations:4d} {r.error_state:12.4e} "
              f"{r.rate_state:6.2f} {r.error_adjoint:12.4e} "
              f"{r.rate_adjoint:6.2f}")
    print("wrote", path)
    return 0


def _cmd_check_gradient(args) -> int:
    config = _load(args.config)
    case = build_case(config)
    control = _initial_control(case, config)
    rows = check_gradient(case, control, n_entries=args.entries,
                          delta=args.delta)
    print(f"{'entry':>12} {'adjoint':>14} {'fd':>14} {'mismatch':>10}")
    for entry, adj, fd, mismatch in rows:
        print(f"{str(entry):>12} {adj:14.6e} {fd:14.6e} {mismatch:10.3e}")
    print("max mismatch:", max(r[3] for r in rows))
    return 0


def _cmd_list_presets(_args) -> int:
    for name in _preset_names():
        print(name)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvocp",
        description="Finite-volume adjoint solver for PDE-constrained "
                    "optimal control")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve an optimal control problem")
    p.add_argument("config", help="config file path or preset name")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("forward", help="forward solve with a given control")
    p.add_argument("config", help="config file path or preset name")
    p.add_argument("--control", type=float, required=True,
                   help="constant control value")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_forward)

    p = sub.add_parser("convergence", help="benchmark mesh refinement study")
    p.add_argument("config", nargs="?", help="optional config file or preset")
    p.add_argument("--eps", type=float, help="diffusion coefficient")
    p.add_argument("--meshes", default="4,8,16,32",
                   help="comma-separated cell counts")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("check-gradient",
                       help="compare the adjoint gradient with finite "
                            "differences")
    p.add_argument("config", help="config file path or preset name")
    p.add_argument("--entries", type=int, default=10)
    p.add_argument("--delta", type=float, default=1e-6)
    p.set_defaults(func=_cmd_check_gradient)

    p = sub.add_parser("list-presets", help="list shipped configurations")
    p.set_defaults(func=_cmd_list_presets)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for message in exc.errors:
            print("config error:", message, file=sys.stderr)
        return 2
    except SolverError as exc:
        print("solver failure:", exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
