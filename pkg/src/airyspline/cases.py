"""Built-in benchmark cases, closed-form references and error metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .constraints import BoundaryConditionSpec
from .errors import ConfigurationError, DomainError, ReferenceUnavailableError
from .geometry import EdgeRef, bar, beam, bilayer_bottom, bilayer_top, inverse_map, map_point, parabolic
from .materials import (
    BodyForcePotential,
    IsotropicPlaneStress,
    OrthotropicLayer,
    RotatedOrthotropicLayered,
)
from .physics import Patch, patch_quadrature
from .solver import Problem, Solution
from .splines import ControlNet

CASE_NAMES = ("bar-self-weight", "beam-uniform-load", "bilayer-cantilever", "parabolic-cantilever")
COMPONENTS = ("sigma_xx", "sigma_yy", "sigma_xy")


@dataclass(frozen=True)
class Station:
    """Vertical line ``x = const`` through one or more patches, for profile extracts."""

    x: float
    patches: tuple


@dataclass(eq=False)
class CaseDefinition:
    name: str
    patches: list
    conditions: list
    parameters: dict
    reference: Callable | None = None
    stations: tuple = ()
    quadrature: object = None
    energy_convention: str = "matrix"
    notes: tuple = ()
    displacement_edges: list = field(default_factory=list)

    @property
    def has_reference(self) -> bool:
        return self.reference is not None

    @property
    def ndof(self) -> int:
        return sum(p.ndof for p in self.patches)

    def problem(self) -> Problem:
        return Problem(self.patches, self.conditions, self.displacement_edges,
                       self.quadrature, self.energy_convention)

    def patch(self, name: str) -> Patch:
        for p in self.patches:
            if p.name == name:
                return p
        raise ConfigurationError(f"case {self.name!r} has no patch {name!r}")


# ---------------------------------------------------------------------------
# overrides

_OVERRIDES = ("degrees", "net", "aspect", "quadrature")


def _pair(value, what):
    if value is None:
        return None
    try:
        a, b = (int(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{what} must be a pair of integers, got {value!r}") from None
    return a, b


def _check_overrides(name, overrides):
    unknown = set(overrides) - set(_OVERRIDES)
    if unknown:
        raise ConfigurationError(f"unsupported override(s) {sorted(unknown)}; allowed: {_OVERRIDES}")
    if overrides.get("aspect") is not None and name != "beam-uniform-load":
        raise ConfigurationError("the aspect override applies to the beam case only")


def _net(defaults_deg, defaults_net, overrides):
    deg = _pair(overrides.get("degrees"), "degrees") or defaults_deg
    shape = _pair(overrides.get("net"), "net") or defaults_net
    return ControlNet.uniform(deg, shape)


def _bc(name, patch, side, kind, target=0.0, component="both", **kw):
    return BoundaryConditionSpec(name, EdgeRef(patch, side), kind, target, component, **kw)


# ---------------------------------------------------------------------------
# cases


def _bar(overrides) -> CaseDefinition:
    l, c, rho, g = 2.0, 0.5, 1.0, 9.81
    pot = BodyForcePotential("linear-gravity", rho, g, (0.0, 1.0))
    patch = Patch("bar", bar(l, c), _net((3, 3), (5, 10), overrides), IsotropicPlaneStress(1e5, 0.3), pot)
    conds = [
        _bc("left", "bar", "xi=0", "traction-pointwise", (0.0, 0.0)),
        _bc("right", "bar", "xi=1", "traction-pointwise", (0.0, 0.0)),
        _bc("bottom", "bar", "eta=0", "traction-pointwise", (0.0, 0.0)),
        _bc("clamp", "bar", "eta=1", "free"),
    ]

    def reference(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.stack([np.zeros_like(x), rho * g * (l - y), np.zeros_like(x)], axis=-1)

    return CaseDefinition("bar-self-weight", [patch], conds,
                          dict(l=l, c=c, rho=rho, g=g, E=1e5, nu=0.3), reference,
                          (Station(c / 2, ("bar",)),),
                          notes=("y points down; clamp at y = 0",))


def _beam(overrides) -> CaseDefinition:
    c, w = 0.25, 1.0
    aspect = float(overrides.get("aspect") or 12.0)
    if not aspect > 0:
        raise ConfigurationError("aspect ratio must be positive")
    l = aspect * c
    patch = Patch("beam", beam(l, c), _net((2, 5), (3, 6), overrides), IsotropicPlaneStress(1e5, 0.3))
    conds = [
        # loaded face y = -c: outward normal (0, -1), so t_y = -sigma_yy = w
        _bc("loaded", "beam", "eta=1", "traction-pointwise", (0.0, w)),
        _bc("unloaded", "beam", "eta=0", "traction-pointwise", (0.0, 0.0)),
        _bc("left-axial", "beam", "xi=0", "traction-pointwise", (0.0, 0.0), "x"),
        _bc("left-shear", "beam", "xi=0", "resultant-force", -w * l, "y"),
        _bc("left-moment", "beam", "xi=0", "moment", 0.0),
        _bc("right-axial", "beam", "xi=1", "traction-pointwise", (0.0, 0.0), "x"),
        _bc("right-shear", "beam", "xi=1", "resultant-force", -w * l, "y"),
        _bc("right-moment", "beam", "xi=1", "moment", 0.0),
    ]

    def reference(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        sxx = 3 * w / (4 * c) * (l**2 / c**2 - 0.4) * y - 3 * w / (4 * c**3) * (x**2 * y - 2 * y**3 / 3)
        syy = -w / 2 + 3 * w * y / (4 * c) - w * y**3 / (4 * c**3)
        sxy = -3 * w * x / (4 * c) + 3 * w * x * y**2 / (4 * c**3)
        return np.stack([sxx, syy, sxy], axis=-1)

    return CaseDefinition("beam-uniform-load", [patch], conds,
                          dict(l=l, c=c, aspect=aspect, w=w, E=1e5, nu=0.3), reference,
                          (Station(0.0, ("beam",)), Station(1.5, ("beam",))),
                          notes=("load w applied on the face y = -c",))


def _bilayer(overrides) -> CaseDefinition:
    L, H1, H2, w = 500.0, 50.0, 50.0, 1.0
    props = dict(E11=10e9, E22=0.5e9, G12=1e9, nu=0.0)
    bottom_mat = RotatedOrthotropicLayered([OrthotropicLayer(**props, theta_deg=0.0)], [0.0, H1])
    top_mat = RotatedOrthotropicLayered([OrthotropicLayer(**props, theta_deg=15.0)], [H1, H1 + H2])
    bottom = Patch("bottom", bilayer_bottom(L, H1), _net((2, 4), (12, 7), overrides), bottom_mat)
    top = Patch("top", bilayer_top(L, H1, H2), _net((2, 4), (12, 7), overrides), top_mat)
    conds = [
        _bc("top-load", "top", "eta=1", "traction-pointwise", (0.0, -w)),
        _bc("top-right", "top", "xi=1", "traction-pointwise", (0.0, 0.0)),
        _bc("bottom-right", "bottom", "xi=1", "traction-pointwise", (0.0, 0.0)),
        _bc("bottom-face", "bottom", "eta=0", "traction-pointwise", (0.0, 0.0)),
        BoundaryConditionSpec("interface", EdgeRef("bottom", "eta=1"), "interface-coupling",
                              partner=EdgeRef("top", "eta=0")),
        _bc("top-clamp", "top", "xi=0", "free"),
        _bc("bottom-clamp", "bottom", "xi=0", "free"),
    ]
    return CaseDefinition("bilayer-cantilever", [bottom, top], conds,
                          dict(L=L, H1=H1, H2=H2, w=w, theta_bottom=0.0, theta_top=15.0, **props), None,
                          (Station(250.0, ("bottom", "top")), Station(375.0, ("bottom", "top"))))


def _parabolic(overrides) -> CaseDefinition:
    L, H0, Q, P = 5.0, 1.0, 1e5, -1e5
    patch = Patch("beam", parabolic(L, H0), _net((6, 4), (10, 5), overrides), IsotropicPlaneStress(1e5, 0.3))
    conds = [
        _bc("top", "beam", "eta=1", "traction-pointwise", (0.0, 0.0)),
        _bc("bottom", "beam", "eta=0", "traction-pointwise", (0.0, 0.0)),
        _bc("load-x", "beam", "xi=1", "resultant-force", Q, "x"),
        _bc("load-y", "beam", "xi=1", "resultant-force", P, "y"),
        _bc("clamp", "beam", "xi=0", "free"),
    ]
    return CaseDefinition("parabolic-cantilever", [patch], conds,
                          dict(L=L, H0=H0, HL=H0 / 2, Q=Q, P=P, E=1e5, nu=0.3), None,
                          (Station(L / 2, ("beam",)),))


_BUILDERS = {
    "bar-self-weight": _bar,
    "beam-uniform-load": _beam,
    "bilayer-cantilever": _bilayer,
    "parabolic-cantilever": _parabolic,
}


def build_case(name: str, **overrides) -> CaseDefinition:
    """Built-in case ``name`` with optional ``degrees``, ``net``, ``aspect``, ``quadrature``."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown case {name!r}; choose from {CASE_NAMES}") from None
    overrides = {k: v for k, v in overrides.items() if v is not None}
    _check_overrides(name, overrides)
    case = builder(overrides)
    q = overrides.get("quadrature")
    if q is not None:
        if int(q) < 1:
            raise ConfigurationError("quadrature order must be positive")
        case.quadrature = int(q)
    return case


# ---------------------------------------------------------------------------
# references and errors


def reference_stress(case: CaseDefinition, x, y) -> np.ndarray:
    """Closed-form ``(sigma_xx, sigma_yy, sigma_xy)``; stacked on the last axis."""
    if case.reference is None:
        raise ReferenceUnavailableError(f"no closed-form reference for {case.name!r}")
    return case.reference(x, y)


def _component_index(component) -> int:
    if isinstance(component, (int, np.integer)):
        if not 0 <= component < 3:
            raise ConfigurationError(f"component index {component} out of range")
        return int(component)
    try:
        return COMPONENTS.index(component)
    except ValueError:
        raise ConfigurationError(f"component must be one of {COMPONENTS}") from None


def _relative_l2(diff2, ref2, label):
    if ref2 <= 0.0:
        raise ZeroDivisionError(f"reference {label} has zero L2 norm")
    return math.sqrt(diff2 / ref2)


def _l2_sums(solution: Solution, case: CaseDefinition):
    diff2 = np.zeros(3)
    ref2 = np.zeros(3)
    for patch in case.patches:
        xi, eta, w = patch_quadrature(patch, case.quadrature)
        x, y = map_point(patch.mapping, xi, eta)
        ref = reference_stress(case, x, y)
        got = solution.stresses(patch.name, xi, eta)
        diff2 += w @ (got - ref) ** 2
        ref2 += w @ ref**2
    return diff2, ref2


def l2_relative_error(solution: Solution, case: CaseDefinition, component) -> float:
    """``||sigma - sigma_ref|| / ||sigma_ref||`` over all patches, with the energy quadrature."""
    k = _component_index(component)
    diff2, ref2 = _l2_sums(solution, case)
    return _relative_l2(diff2[k], ref2[k], COMPONENTS[k])


def field_l2_relative_error(field, reference, weights) -> float:
    """Discrete relative L2 error of sampled values with quadrature ``weights``."""
    field, reference, weights = (np.asarray(a, dtype=float) for a in (field, reference, weights))
    return _relative_l2(float(weights @ (field - reference) ** 2), float(weights @ reference**2), "field")


def error_table(solution: Solution, case: CaseDefinition) -> dict:
    """Per-component relative errors (``None`` without a reference).

    A component whose reference vanishes identically is measured against the
    norm of the whole reference stress instead.
    """
    if not case.has_reference:
        return {c: None for c in COMPONENTS}
    diff2, ref2 = _l2_sums(solution, case)
    total = ref2.sum()
    return {c: _relative_l2(diff2[k], ref2[k] if ref2[k] > 0 else total, c) for k, c in enumerate(COMPONENTS)}


# ---------------------------------------------------------------------------
# profiles along vertical stations


def _xi_at(patch: Patch, x: float) -> float:
    """Parametric ``xi`` of the line ``x = const``; built-in mappings keep ``x`` a function of ``xi`` only."""
    f = lambda u: map_point(patch.mapping, u, 0.5)[0] - x
    fa, fb = f(0.0), f(1.0)
    if fa * fb > 0:
        raise DomainError(f"x = {x} lies outside patch {patch.name!r}")
    if fa == 0.0:
        return 0.0
    if fb == 0.0:
        return 1.0
    return float(brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def profile(solution: Solution, case: CaseDefinition, station: Station, npts: int = 51):
    """Rows ``(patch, xi, eta, x, y, sxx, syy, sxy)`` along ``station``, bottom to top in ``y``."""
    rows = []
    for name in station.patches:
        patch = case.patch(name)
        xi = _xi_at(patch, station.x)
        eta = np.linspace(0.0, 1.0, npts)
        xs, ys = map_point(patch.mapping, np.full_like(eta, xi), eta)
        sig = solution.stresses(name, np.full_like(eta, xi), eta)
        for k in range(npts):
            rows.append((name, xi, float(eta[k]), float(xs[k]), float(ys[k]), *map(float, sig[k])))
    rows.sort(key=lambda r: r[4])
    return rows


def line_error(solution: Solution, case: CaseDefinition, patch_name: str, x: float,
               y_range: tuple, component, npts: int = 8) -> tuple:
    """Relative L2 error along ``x = const`` for ``y`` in ``y_range``.

    Returns ``(error, norms)`` where ``norms`` holds the L2 norm of every
    computed component over the same segment.
    """
    patch = case.patch(patch_name)
    xi0 = _xi_at(patch, x)
    ya, yb = sorted(y_range)
    etas = []
    for y in (ya, yb):
        _, e = inverse_map(patch.mapping, x, y, guess=(xi0, 0.5))
        etas.append(float(e))
    lo, hi = sorted(etas)
    # composite Gauss rule in y
    g, gw = np.polynomial.legendre.leggauss(npts)
    edges = np.linspace(ya, yb, 33)
    ys, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ys.append(0.5 * (a + b) + 0.5 * (b - a) * g)
        ws.append(0.5 * (b - a) * gw)
    ys, ws = np.concatenate(ys), np.concatenate(ws)
    eta = np.array([inverse_map(patch.mapping, x, y, guess=(xi0, 0.5))[1] for y in ys])
    if np.any(eta < lo - 1e-9) or np.any(eta > hi + 1e-9):
        raise DomainError("line samples left the requested segment")
    sig = solution.stresses(patch_name, np.full_like(eta, xi0), eta)
    ref = reference_stress(case, np.full_like(ys, x), ys)
    k = _component_index(component)
    norms = np.sqrt(ws @ sig**2)
    return field_l2_relative_error(sig[:, k], ref[:, k], ws), norms


__all__ = [
    "CASE_NAMES",
    "COMPONENTS",
    "CaseDefinition",
    "Station",
    "build_case",
    "error_table",
    "field_l2_relative_error",
    "l2_relative_error",
    "line_error",
    "profile",
    "reference_stress",
]
