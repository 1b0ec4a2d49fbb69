"""Control variables and their inner products.

Three kinds are supported:

* ``distributed``  - one value per cell (a volumetric source term),
* ``boundary``     - one value per face of a boundary patch (a Dirichlet trace),
* ``scalar``       - a single value applied uniformly on a boundary patch.

Each kind may carry independent values per time level (levels 1..N, matching
the right-endpoint time quadrature) or a single set applied at every level
(``time_constant=True``).  Inner products are the discrete L2 products over
the control's space-time support, so gradients returned by the optimizer are
Riesz representatives in that space.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

KINDS = ("distributed", "boundary", "scalar")


@dataclass(frozen=True)
class Control:
    kind: str
    values: np.ndarray  # see module docstring for shapes
    time_constant: bool = False
    patch: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown control kind {self.kind!r}")
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=float))

    def level(self, n: int):
        """Values applied at time level n (1-based)."""
        if self.time_constant:
            return self.values
        return self.values[n - 1]

    def with_values(self, values) -> "Control":
        return replace(self, values=np.asarray(values, dtype=float))

    def shifted(self, direction: "Control", step: float) -> "Control":
        return self.with_values(self.values - step * direction.values)


def control_support(case):
    """(entry weights, total time weight) of the control inner product."""
    if case.control_kind == "distributed":
        weights = np.full(case.grid.n_cells, case.grid.cell_volume)
    else:
        patch = case.grid.patch(case.control_patch)
        n_faces = patch.n_faces
        if case.control_face_mask is not None:
            n_faces = int(np.count_nonzero(case.control_face_mask))
        if case.control_kind == "boundary":
            weights = np.full(n_faces, patch.face_measure)
        else:
            weights = np.array([n_faces * patch.face_measure])
    return weights, case.t_final


def zero_control(case) -> Control:
    weights, _ = control_support(case)
    n_entries = len(weights) if case.control_kind != "scalar" else 1
    if case.control_kind == "scalar":
        shape = () if case.control_time_constant else (case.n_steps,)
    elif case.control_time_constant:
        shape = (n_entries,)
    else:
        shape = (case.n_steps, n_entries)
    return Control(case.control_kind, np.zeros(shape),
                   time_constant=case.control_time_constant,
                   patch=case.control_patch)


def control_inner(case, a: Control, b: Control) -> float:
    """Discrete L2 inner product over the control's space-time support."""
    if a.kind != b.kind or a.time_constant != b.time_constant:
        raise ValueError("controls are not compatible")
    weights, t_final = control_support(case)
    if a.kind == "scalar":
        prod = np.atleast_1d(a.values * b.values) * weights[0]
    else:
        prod = (a.values * b.values) @ weights
    if a.time_constant:
        return float(np.sum(prod) * t_final)
    return float(np.sum(prod) * case.dt)


def control_norm(case, a: Control) -> float:
    return float(np.sqrt(control_inner(case, a, a)))


def entry_measure(case, control: Control, entry) -> float:
    """Space-time measure attached to one stored control entry.

    Multiplying a Riesz-representative gradient entry by this measure gives
    the raw partial derivative of the objective with respect to that entry.
    """
    weights, t_final = control_support(case)
    if control.kind == "scalar":
        w = weights[0]
    elif control.time_constant:
        w = weights[entry]
    else:
        w = weights[entry[-1]]
    t_weight = t_final if control.time_constant else case.dt
    return float(w * t_weight)
