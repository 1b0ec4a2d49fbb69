"""YAML run configurations: schema validation and case construction.

A configuration is a YAML document with the sections `case`, `coefficients`,
`weights`, `control`, `target`, `velocity`, `optimizer` and `output`.  The
schema is strict: unknown sections or keys are rejected with their full key
path, so typos fail loudly instead of silently falling back to defaults.
All quantities are in dimensionless problem units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from . import cases as cases_mod

KINDS = ("benchmark", "light_distributed", "light_concentrated_1d",
         "light_concentrated_2d", "transport")

# allowed keys per section, per case kind ("*" applies to all kinds)
_SCHEMA = {
    "case": {"*": {"kind", "cells", "t_final", "dt"},
             "transport": {"extent"},
             "light_distributed": {"bound_span"},
             "light_concentrated_1d": {"bound_span"},
             "light_concentrated_2d": {"bound_span"}},
    "coefficients": {
        "benchmark": {"diffusion"},
        "light_distributed": {"drug_diffusion", "conversion", "decay_rate"},
        "light_concentrated_1d": {"drug_diffusion", "light_diffusion",
                                  "absorption", "conversion", "light_speed"},
        "light_concentrated_2d": {"drug_diffusion", "light_diffusion",
                                  "absorption", "conversion", "light_speed"},
        "transport": {"diffusion"},
    },
    "weights": {"*": {"beta1"}, "benchmark": {"beta2"},
                "light_distributed": {"beta3"},
                "light_concentrated_1d": {"beta3"},
                "light_concentrated_2d": {"beta3"},
                "transport": {"beta3"}},
    "control": {"*": {"initial", "time_constant"},
                "transport": {"drug_span"}},
    "target": {"*": {"path", "generate"}},
    "velocity": {"*": {"kind", "value", "peak", "period", "path"}},
    "optimizer": {"*": {"tol", "max_iter", "step_mode", "alpha0"}},
    "output": {"*": {"directory", "formats"}},
}

_REQUIRED = {"case": ("kind",)}


class ConfigError(Exception):
    """Raised on schema violations; `errors` lists messages with key paths."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    """Validated configuration document, one attribute per section."""

    case: dict
    coefficients: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    control: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)
    velocity: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        doc = {}
        for name in _SCHEMA:
            section = getattr(self, name)
            if section:
                doc[name] = section
        return doc

    def serialize(self) -> str:
        return yaml.safe_dump(self.as_dict(), sort_keys=True,
                              default_flow_style=False)


def _validate(doc) -> list:
    errors = []
    if not isinstance(doc, dict) or not doc:
        return ["[case]: document is empty or not a mapping"]
    for name in doc:
        if name not in _SCHEMA:
            errors.append(f"[{name}]: unknown section")
    case = doc.get("case")
    if not isinstance(case, dict):
        errors.append("[case]: required section is missing or not a mapping")
        return errors
    kind = case.get("kind")
    if kind not in KINDS:
        errors.append(f"[case].kind: must be one of {', '.join(KINDS)}")
        return errors
    for name, per_kind in _SCHEMA.items():
        section = doc.get(name)
        if section is None:
            continue
        if not isinstance(section, dict):
            errors.append(f"[{name}]: not a mapping")
            continue
        allowed = per_kind.get("*", set()) | per_kind.get(kind, set())
        for key in section:
            if key not in allowed:
                errors.append(f"[{name}].{key}: unknown key for kind {kind}")
    t_final = case.get("t_final")
    dt = case.get("dt")
    if t_final is not None and dt is not None:
        n = round(t_final / dt)
        if n < 1 or abs(n * dt - t_final) > 1e-9 * t_final:
            errors.append("[case].dt: t_final is not an integer multiple")
    target = doc.get("target") or {}
    if "path" in target and "generate" in target:
        errors.append("[target]: path and generate are mutually exclusive")
    return errors


def load_config(text: str) -> RunConfig:
    """Parse and validate a YAML document given as a string."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"[case]: not valid YAML ({exc})"])
    errors = _validate(doc)
    if errors:
        raise ConfigError(errors)
    sections = {name: doc.get(name) or {} for name in _SCHEMA}
    return RunConfig(**sections)


def parse_config(path) -> RunConfig:
    """Load and validate a configuration file."""
    with open(path) as handle:
        return load_config(handle.read())


def _cells(value, default):
    if value is None:
        return default
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return int(value)


def build_case(config: RunConfig) -> cases_mod.CaseDefinition:
    """Construct the CaseDefinition described by a validated configuration."""
    kind = config.case["kind"]
    co, w = config.coefficients, config.weights
    gen = config.target.get("generate") or {}
    kwargs = {}

    def put(key, value):
        if value is not None:
            kwargs[key] = value

    put("t_final", config.case.get("t_final"))
    put("dt", config.case.get("dt"))
    if kind == "benchmark":
        put("n", _cells(config.case.get("cells"), None))
        put("diffusion", co.get("diffusion"))
        put("control_weight", w.get("beta1"))
        put("tracking_weight", w.get("beta2"))
        case = cases_mod.benchmark_case(**kwargs)
    elif kind == "light_distributed":
        put("cells", _cells(config.case.get("cells"), None))
        put("drug_diffusion", co.get("drug_diffusion"))
        put("conversion", co.get("conversion"))
        put("decay_rate", co.get("decay_rate"))
        put("bound_span", config.case.get("bound_span"))
        put("control_weight", w.get("beta1"))
        put("terminal_weight", w.get("beta3"))
        put("amplitude", gen.get("amplitude"))
        case = cases_mod.light_distributed_case(**kwargs)
    elif kind in ("light_concentrated_1d", "light_concentrated_2d"):
        put("cells", _cells(config.case.get("cells"), None))
        put("drug_diffusion", co.get("drug_diffusion"))
        put("light_diffusion", co.get("light_diffusion"))
        put("absorption", co.get("absorption"))
        put("conversion", co.get("conversion"))
        put("light_speed", co.get("light_speed"))
        put("bound_span", config.case.get("bound_span"))
        put("control_weight", w.get("beta1"))
        put("terminal_weight", w.get("beta3"))
        put("amplitude", gen.get("amplitude"))
        case = cases_mod.light_concentrated_case(
            dim=1 if kind.endswith("1d") else 2, **kwargs)
    elif kind == "transport":
        put("cells", _cells(config.case.get("cells"), None))
        extent = config.case.get("extent")
        if extent is not None:
            kwargs["extent"] = tuple(float(v) for v in extent)
        put("diffusion", co.get("diffusion"))
        put("control_weight", w.get("beta1"))
        put("terminal_weight", w.get("beta3"))
        put("reference_value", gen.get("value"))
        span = config.control.get("drug_span")
        if span is not None:
            kwargs["drug_span"] = tuple(float(v) for v in span)
        vel = config.velocity
        if vel.get("kind") == "analytic":
            put("peak", vel.get("peak"))
            put("period", vel.get("period"))
        elif vel.get("kind") == "file":
            from .outputs import read_velocity_file
            frames, file_dt = read_velocity_file(vel["path"])
            kwargs["velocity"] = {"kind": "frames", "frames": frames,
                                  "dt": file_dt}
        case = cases_mod.transport_case(**kwargs)
    else:  # pragma: no cover - guarded by the schema
        raise ValueError(f"unknown case kind {kind!r}")

    path = config.target.get("path")
    if path is not None:
        target = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)[:, -1]
        if target.size != case.grid.n_cells:
            raise ConfigError([f"[target].path: {target.size} values for "
                               f"{case.grid.n_cells} cells"])
        case.target = target
    return case
