"""Boundary-condition stage, complementary-energy stage and the combined solve.

Two-stage mode
    1. Sum the weak boundary-condition forms, split the control values into
       those touched by the conditions (*involved*) and the untouched free set.
    2. Solve the condition least-squares problem on the involved values
       (minimum norm) and keep the null space of that system.
    3. Minimise the complementary energy over the free set plus that null space,
       so the condition residual stays at its minimum.

Combined mode minimises ``energy + lambda * s * sum(conditions)`` in one system,
where ``s = ||H_energy|| / ||H_conditions||`` makes ``lambda`` dimensionless.

The stress function is only defined up to affine terms. ``pin-affine`` fixes
control values (0,0), (1,0), (0,1) of each patch at zero when they are free;
otherwise, and for ``gauge="min-norm"``, the reduced system is solved with a
symmetric pseudo-inverse.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .constraints import BoundaryConditionSpec, residual_form
from .errors import ConfigurationError, GaugeError, InvalidMaterialError, SolverError
from .physics import (
    GlobalDofMap,
    Patch,
    QuadraticForm,
    external_energy_form,
    internal_energy_form,
    stress_field,
    sum_forms,
)

log = logging.getLogger(__name__)

MODES = ("two-stage", "combined")
GAUGES = ("pin-affine", "min-norm")

# relative eigenvalue cut for null spaces and pseudo-inverses
_RCOND = 1e-10


@dataclass(frozen=True)
class SolveOptions:
    mode: str = "two-stage"
    bc_weight: float = 1.0
    tolerance: float = 1e-12
    gauge: str = "pin-affine"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.gauge not in GAUGES:
            raise ConfigurationError(f"gauge must be one of {GAUGES}, got {self.gauge!r}")
        if not self.tolerance > 0:
            raise ConfigurationError("involvement tolerance must be positive")
        if not self.bc_weight > 0:
            raise ConfigurationError("bc weight must be positive")


@dataclass(eq=False)
class Problem:
    """Patches, weak conditions and displacement edges of one elastostatic problem."""

    patches: Sequence[Patch]
    conditions: Sequence[BoundaryConditionSpec] = ()
    displacement_edges: Sequence[tuple] = ()
    quadrature: object = None
    energy_convention: str = "tensor"

    def __post_init__(self):
        self.patches = list(self.patches)
        self.conditions = list(self.conditions)
        self.displacement_edges = list(self.displacement_edges)
        self.dof_map = GlobalDofMap(self.patches)
        names = [c.name for c in self.conditions]
        if len(set(names)) != len(names):
            raise ConfigurationError("boundary condition names must be unique")
        for spec in self.conditions:
            for e in (spec.edge, spec.partner):
                if e is not None and e.patch not in self.dof_map.patches:
                    raise ConfigurationError(f"{spec.name}: unknown patch {e.patch!r}")

    @property
    def ndof(self) -> int:
        return self.dof_map.total

    @cached_property
    def energy_form(self) -> QuadraticForm:
        form = internal_energy_form(self.patches, self.dof_map, self.quadrature, self.energy_convention)
        if self.displacement_edges:
            form = form + external_energy_form(self.displacement_edges, self.patches, self.dof_map)
        return form

    @cached_property
    def condition_forms(self) -> dict:
        out = {}
        for spec in self.conditions:
            f = residual_form(spec, self.patches, self.dof_map)
            if f is not None:
                out[spec.name] = f
        return out

    @property
    def bc_form(self) -> QuadraticForm:
        return sum_forms(self.condition_forms.values(), self.ndof)

    def gauge_dofs(self) -> dict:
        """Per patch, the three control values pinned by ``pin-affine``."""
        return {name: [self.dof_map.index(name, i, j) for i, j in ((0, 0), (1, 0), (0, 1))]
                for name in self.dof_map.patches}


@dataclass(frozen=True, eq=False)
class Solution:
    values: np.ndarray
    involved: np.ndarray
    free: np.ndarray
    energy: float
    bc_residuals: dict
    diagnostics: dict = field(default_factory=dict)
    problem: Problem | None = None

    def patch_values(self, name: str) -> np.ndarray:
        return self.problem.dof_map.patch_values(name, self.values)

    def stresses(self, name: str, xi, eta) -> np.ndarray:
        patch = self.problem.dof_map.patches[name]
        return stress_field(patch, self.patch_values(name), xi, eta)


# ---------------------------------------------------------------------------
# stages


def partition_dofs(bc_form: QuadraticForm, tol: float = 1e-12):
    """Split DOFs into (involved, free) by the column norms of the condition Hessian."""
    norms = np.linalg.norm(bc_form.H, axis=0)
    top = norms.max() if norms.size else 0.0
    if top == 0.0:
        if np.any(bc_form.g != 0) or bc_form.c != 0:
            log.warning("boundary conditions have targets but touch no control value")
        return np.array([], dtype=int), np.arange(bc_form.size)
    involved = np.flatnonzero(norms > tol * top)
    free = np.flatnonzero(norms <= tol * top)
    return involved, free


@dataclass(frozen=True, eq=False)
class BCStageResult:
    values: np.ndarray  # full-length vector, zero outside the involved set
    null_space: np.ndarray  # (N, k) directions that leave the residual unchanged
    residual: float
    rank: int


def _sym_pinv_solve(K, r, rcond=_RCOND):
    lam, V = np.linalg.eigh(K)
    top = max(abs(lam).max(), np.finfo(float).tiny) if lam.size else 1.0
    keep = lam > rcond * top
    if np.any(lam < -1e3 * rcond * top):
        raise SolverError(f"reduced Hessian is indefinite (min eigenvalue {lam.min():.3g}, max {top:.3g})")
    x = V[:, keep] @ ((V[:, keep].T @ r) / lam[keep])
    return x, lam, keep, V


def solve_bc_stage(bc_form: QuadraticForm, involved, rcond: float = _RCOND) -> BCStageResult:
    """Minimum-norm minimiser of the condition residual over the involved DOFs."""
    involved = np.asarray(involved, dtype=int)
    N = bc_form.size
    if involved.size == 0:
        raise SolverError("boundary-condition stage needs at least one involved DOF")
    H = bc_form.H[np.ix_(involved, involved)]
    x_I, lam, keep, V = _sym_pinv_solve(H, -bc_form.g[involved], rcond)
    values = np.zeros(N)
    values[involved] = x_I
    null = np.zeros((N, int((~keep).sum())))
    null[involved] = V[:, ~keep]
    return BCStageResult(values, null, bc_form.value(values), int(keep.sum()))


def _bc_value(problem: Problem, x) -> float:
    return float(sum(f.value(x) for f in problem.condition_forms.values()))


def _minimize(form: QuadraticForm, base, Z, pinned_cols, gauge, rcond=_RCOND):
    """Minimise ``form(base + Z z)``; returns (x, diagnostics)."""
    H, g = form.H, form.g
    diag = {}
    if Z.shape[1] == 0:
        diag.update(rank=0, condition=1.0, gauge="none", reduced_size=0)
        return np.array(base, dtype=float), diag
    cols = np.arange(Z.shape[1])
    use_pin = gauge == "pin-affine" and pinned_cols is not None
    if use_pin:
        cols = np.setdiff1d(cols, pinned_cols)
    Zr = Z[:, cols]
    K = Zr.T @ H @ Zr
    K = 0.5 * (K + K.T)
    r = -Zr.T @ (H @ base + g)
    lam = np.linalg.eigvalsh(K)
    top = max(abs(lam).max(), np.finfo(float).tiny)
    if lam.min() < -1e3 * rcond * top:
        raise InvalidMaterialError(f"energy Hessian is indefinite on the free set (min eigenvalue {lam.min():.3g})")
    if use_pin:
        # only a numerically exact zero counts as singular here; strongly weighted
        # conditions legitimately spread the spectrum beyond 1/rcond
        if lam.min() <= lam.size * np.finfo(float).eps * top:
            raise GaugeError(
                f"reduced Hessian singular after pinning the affine gauge "
                f"({int(np.sum(lam <= lam.size * np.finfo(float).eps * top))} zero eigenvalue(s) of {lam.size})"
            )
        z = scipy.linalg.solve(K, r, assume_a="sym")
        diag.update(rank=int(lam.size), condition=float(top / lam.min()), gauge="pin-affine")
    else:
        z, lam, keep, _ = _sym_pinv_solve(K, r, rcond)
        kept = lam[keep]
        diag.update(rank=int(keep.sum()), condition=float(top / kept.min()) if kept.size else np.inf,
                    gauge="min-norm")
    diag["reduced_size"] = int(len(cols))
    return base + Zr @ z, diag


def _pinned_columns(problem: Problem | None, dof_index: np.ndarray):
    """Column positions (within ``dof_index``) of the gauge DOFs, or None if any is missing."""
    if problem is None:
        return None
    where = {int(d): k for k, d in enumerate(dof_index)}
    cols = []
    for dofs in problem.gauge_dofs().values():
        if not all(d in where for d in dofs):
            return None
        cols.extend(where[d] for d in dofs)
    return np.array(cols, dtype=int)


def solve_energy_stage(energy_form: QuadraticForm, fixed, free, gauge: str = "pin-affine",
                       problem: Problem | None = None, extra_directions=None):
    """Minimise the energy over the free DOFs (plus optional extra directions).

    ``fixed`` is the full control vector from the condition stage. Returns
    ``(values, diagnostics)``.
    """
    free = np.asarray(free, dtype=int)
    N = energy_form.size
    E = np.zeros((N, free.size))
    E[free, np.arange(free.size)] = 1.0
    Z = E if extra_directions is None else np.hstack([E, extra_directions])
    pinned = _pinned_columns(problem, free) if problem is not None else None
    return _minimize(energy_form, np.asarray(fixed, dtype=float), Z, pinned, gauge)


def _report(problem: Problem, x, involved, free, diag, mode) -> Solution:
    residuals = {name: f.value(x) for name, f in problem.condition_forms.items()}
    diag = dict(diag, mode=mode, ndof=problem.ndof, free=int(len(free)))
    return Solution(np.asarray(x, dtype=float), np.asarray(involved), np.asarray(free),
                    problem.energy_form.value(x), residuals, diag, problem)


def solve_two_stage(problem: Problem, options: SolveOptions = SolveOptions()) -> Solution:
    bc = problem.bc_form
    involved, free = partition_dofs(bc, options.tolerance)
    diag = {}
    if involved.size:
        stage = solve_bc_stage(bc, involved)
        base, null = stage.values, stage.null_space
        diag.update(bc_rank=stage.rank, bc_null_space=int(null.shape[1]),
                    bc_stage_residual=_bc_value(problem, base))
    else:
        base, null = np.zeros(problem.ndof), None
        diag.update(bc_rank=0, bc_null_space=0, bc_stage_residual=0.0)
    x, d2 = solve_energy_stage(problem.energy_form, base, free, options.gauge, problem, null)
    diag.update(d2)
    return _report(problem, x, involved, free, diag, "two-stage")


def solve_combined(problem: Problem, options: SolveOptions = SolveOptions()) -> Solution:
    energy = problem.energy_form
    bc = problem.bc_form
    hb = np.linalg.norm(bc.H)
    scale = np.linalg.norm(energy.H) / hb if hb > 0 else 0.0
    lam = options.bc_weight * scale
    objective = energy + bc.scaled(lam)
    N = problem.ndof
    all_dofs = np.arange(N)
    pinned = _pinned_columns(problem, all_dofs)
    x, diag = _minimize(objective, np.zeros(N), np.eye(N), pinned, options.gauge)
    diag = dict(diag, bc_scale=scale, bc_weight_effective=lam,
                objective=objective.value(x), objective_gradient=float(np.linalg.norm(objective.gradient(x))))
    involved, free = partition_dofs(bc, options.tolerance)
    return _report(problem, x, involved, free, diag, "combined")


def solve(problem: Problem, options: SolveOptions = SolveOptions()) -> Solution:
    if options.mode == "two-stage":
        return solve_two_stage(problem, options)
    return solve_combined(problem, options)


__all__ = [
    "BCStageResult",
    "Problem",
    "Solution",
    "SolveOptions",
    "partition_dofs",
    "solve",
    "solve_bc_stage",
    "solve_combined",
    "solve_energy_stage",
    "solve_two_stage",
]
