"""Field sampling and the stress.csv / report.txt / profiles.csv writers."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cases import COMPONENTS, CaseDefinition, error_table, profile
from .errors import ConfigurationError
from .geometry import map_point
from .physics import quadrature_orders
from .solver import Solution

HEADER = "patch,xi,eta,x,y,sigma_xx,sigma_yy,sigma_xy"


@dataclass(frozen=True)
class FieldSampleGrid:
    nx: int = 21
    ny: int = 21

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigurationError("sample grid needs at least one point per direction")

    def parameters(self):
        """Parametric points of one patch, ``xi`` varying slowest."""
        u = np.linspace(0.0, 1.0, self.nx) if self.nx > 1 else np.array([0.5])
        v = np.linspace(0.0, 1.0, self.ny) if self.ny > 1 else np.array([0.5])
        XI, ETA = np.meshgrid(u, v, indexing="ij")
        return XI.ravel(), ETA.ravel()


def _fmt(v) -> str:
    """Positional decimal with 17 significant digits (trailing zeros trimmed); round-trips exactly."""
    v = float(v)
    if not np.isfinite(v):
        return repr(v)
    return np.format_float_positional(v, precision=17, unique=False, fractional=False, trim="-")


def _num(v) -> str:
    return format(float(v), ".17g")


def sample_rows(solution: Solution, case: CaseDefinition, grid: FieldSampleGrid):
    rows = []
    xi, eta = grid.parameters()
    for patch in case.patches:
        x, y = map_point(patch.mapping, xi, eta)
        sig = solution.stresses(patch.name, xi, eta)
        for k in range(xi.size):
            rows.append((patch.name, xi[k], eta[k], x[k], y[k], *sig[k]))
    return rows


def _csv(rows) -> str:
    lines = [HEADER]
    for r in rows:
        lines.append(",".join([r[0]] + [_fmt(v) for v in r[1:]]))
    return "\n".join(lines) + "\n"


def report_lines(solution: Solution, case: CaseDefinition, errors: dict | None = None) -> list:
    errors = error_table(solution, case) if errors is None else errors
    d = solution.diagnostics
    lines = [
        f"case = {case.name}",
        f"dofs = {solution.values.size}",
        f"free_dofs = {solution.free.size}",
        f"involved_dofs = {solution.involved.size}",
        f"energy = {_num(solution.energy)}",
        f"energy_convention = {case.energy_convention}",
    ]
    for patch in case.patches:
        kx, ke = quadrature_orders(patch, case.quadrature)
        lines.append(f"quadrature.{patch.name} = {kx}x{ke} Gauss per span")
    for spec in case.conditions:
        if spec.kind != "free":
            lines.append(f"bc_weight.{spec.name} = {_num(spec.weight)}")
    for name, val in solution.bc_residuals.items():
        lines.append(f"bc_residual.{name} = {_num(val)}")
    for comp in COMPONENTS:
        e = errors.get(comp)
        lines.append(f"l2_error.{comp} = {'unavailable' if e is None else _num(e)}")
    for key in sorted(d):
        val = d[key]
        lines.append(f"solver.{key} = {_num(val) if isinstance(val, float) else val}")
    for note in case.notes:
        lines.append(f"note = {note}")
    return lines


def sample_and_export(solution: Solution, case: CaseDefinition, output, grid: FieldSampleGrid = FieldSampleGrid(),
                      errors: dict | None = None, profile_points: int = 51) -> dict:
    """Write ``stress.csv``, ``report.txt`` and (when stations exist) ``profiles.csv``.

    Returns the written paths keyed by file stem.
    """
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"stress": out / "stress.csv", "report": out / "report.txt"}
    with open(paths["stress"], "w", newline="\n") as fh:
        fh.write(_csv(sample_rows(solution, case, grid)))
    with open(paths["report"], "w", newline="\n") as fh:
        fh.write("\n".join(report_lines(solution, case, errors)) + "\n")
    if case.stations:
        paths["profiles"] = out / "profiles.csv"
        lines = ["station_x," + HEADER]
        for st in case.stations:
            for r in profile(solution, case, st, profile_points):
                lines.append(",".join([_fmt(st.x), r[0]] + [_fmt(v) for v in r[1:]]))
        with open(paths["profiles"], "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    return paths


__all__ = ["FieldSampleGrid", "HEADER", "report_lines", "sample_and_export", "sample_rows"]
