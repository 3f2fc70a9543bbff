"""TOML problem description.

Layout::

    [case]
    name = "plate"
    body_force = { kind = "linear-gravity", rho = 1.0, g = 9.81, direction = [0, 1] }
    energy_convention = "tensor"        # or "matrix"

    [splines]                           # defaults for every patch
    degrees = [3, 3]
    net = [5, 5]
    quadrature = 4                      # optional Gauss points per span

    [material.steel]
    kind = "isotropic-plane-stress"
    E = 2.1e11
    nu = 0.3

    [patches.plate]
    mapping = "rectangle"
    params = { x0 = 0.0, y0 = 0.0, width = 1.0, height = 1.0 }
    material = "steel"

    [bcs.top]
    patch = "plate"
    side = "eta=1"
    kind = "traction-pointwise"
    target = [0.0, -1.0]

    [solver]
    mode = "two-stage"

Layered materials use ``kind = "rotated-orthotropic-layered"`` with
``layers = [{E11, E22, G12, nu, theta_deg}, ...]`` and ``bounds``. A boundary
entry of ``kind = "displacement"`` prescribes ``target = [ux, uy]`` through
the external complementary work. Unknown keys raise
:class:`~airyspline.errors.ConfigurationError`.
"""
from __future__ import annotations

import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .cases import CaseDefinition
from .constraints import BC_KINDS, BoundaryConditionSpec
from .errors import AirySplineError, ConfigurationError
from .geometry import EdgeRef, make_mapping
from .materials import (
    ENERGY_CONVENTIONS,
    NO_BODY_FORCE,
    BodyForcePotential,
    IsotropicPlaneStress,
    OrthotropicLayer,
    RotatedOrthotropicLayered,
)
from .physics import Patch
from .solver import SolveOptions
from .splines import ControlNet

_TOP = {"case", "splines", "material", "patches", "bcs", "solver"}
_CASE = {"name", "body_force", "energy_convention"}
_BODY = {"kind", "rho", "g", "direction"}
_SPLINES = {"degrees", "net", "quadrature"}
_PATCH = {"mapping", "params", "material", "degrees", "net"}
_ISO = {"kind", "E", "nu"}
_LAYERED = {"kind", "layers", "bounds"}
_LAYER = {"E11", "E22", "G12", "nu", "theta_deg"}
_BC = {"patch", "side", "kind", "target", "component", "weight", "reversed",
       "partner_patch", "partner_side", "partner_reversed"}
_SOLVER = {"mode", "bc_weight", "tolerance", "gauge"}


def _keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigurationError(f"[{where}] must be a table")
    extra = set(table) - allowed
    if extra:
        raise ConfigurationError(f"unknown key(s) {sorted(extra)} in [{where}]")


def _need(table, key, where):
    if key not in table:
        raise ConfigurationError(f"missing key {key!r} in [{where}]")
    return table[key]


def _material(name, t):
    where = f"material.{name}"
    kind = _need(t, "kind", where)
    if kind == "isotropic-plane-stress":
        _keys(t, _ISO, where)
        return IsotropicPlaneStress(float(_need(t, "E", where)), float(_need(t, "nu", where)))
    if kind == "rotated-orthotropic-layered":
        _keys(t, _LAYERED, where)
        layers = []
        for k, ly in enumerate(_need(t, "layers", where)):
            _keys(ly, _LAYER, f"{where}.layers[{k}]")
            layers.append(OrthotropicLayer(**{key: float(v) for key, v in ly.items()}))
        return RotatedOrthotropicLayered(layers, _need(t, "bounds", where))
    raise ConfigurationError(f"[{where}] unknown material kind {kind!r}")


def _body_force(t):
    if t is None:
        return NO_BODY_FORCE
    _keys(t, _BODY, "case.body_force")
    return BodyForcePotential(t.get("kind", "linear-gravity"), float(t.get("rho", 0.0)),
                              float(t.get("g", 0.0)), tuple(t.get("direction", (0.0, 1.0))))


def _bc(name, t):
    where = f"bcs.{name}"
    _keys(t, _BC, where)
    edge = EdgeRef(_need(t, "patch", where), _need(t, "side", where), bool(t.get("reversed", False)))
    kind = _need(t, "kind", where)
    if kind == "displacement":
        target = t.get("target", (0.0, 0.0))
        if len(target) != 2:
            raise ConfigurationError(f"[{where}] displacement target must be [ux, uy]")
        return None, (edge, tuple(float(v) for v in target))
    if kind not in BC_KINDS:
        raise ConfigurationError(f"[{where}] unknown kind {kind!r}")
    partner = None
    if kind == "interface-coupling":
        partner = EdgeRef(_need(t, "partner_patch", where), _need(t, "partner_side", where),
                          bool(t.get("partner_reversed", False)))
    elif any(k in t for k in ("partner_patch", "partner_side", "partner_reversed")):
        raise ConfigurationError(f"[{where}] partner keys only apply to interface-coupling")
    target = t.get("target", 0.0)
    if isinstance(target, list):
        target = tuple(float(v) for v in target)
    spec = BoundaryConditionSpec(name, edge, kind, target, t.get("component", "both"),
                                 float(t.get("weight", 1.0)), partner)
    return spec, None


def case_from_mapping(data: dict, source: str = "<config>"):
    """``(CaseDefinition, SolveOptions)`` from parsed TOML."""
    _keys(data, _TOP, "top level")
    case_t = data.get("case", {})
    _keys(case_t, _CASE, "case")
    splines = data.get("splines", {})
    _keys(splines, _SPLINES, "splines")
    materials = {name: _material(name, t) for name, t in data.get("material", {}).items()}
    potential = _body_force(case_t.get("body_force"))
    convention = case_t.get("energy_convention", "tensor")
    if convention not in ENERGY_CONVENTIONS:
        raise ConfigurationError(f"energy_convention must be one of {ENERGY_CONVENTIONS}")

    patches = []
    for name, t in data.get("patches", {}).items():
        where = f"patches.{name}"
        _keys(t, _PATCH, where)
        mapping = make_mapping(_need(t, "mapping", where), **t.get("params", {}))
        mat_name = _need(t, "material", where)
        if mat_name not in materials:
            raise ConfigurationError(f"[{where}] unknown material {mat_name!r}")
        degrees = t.get("degrees", splines.get("degrees"))
        net = t.get("net", splines.get("net"))
        if degrees is None or net is None:
            raise ConfigurationError(f"[{where}] needs degrees and net (directly or via [splines])")
        patches.append(Patch(name, mapping, ControlNet.uniform(tuple(degrees), tuple(net)),
                             materials[mat_name], potential))
    if not patches:
        raise ConfigurationError("configuration defines no patches")

    conditions, displacements = [], []
    for name, t in data.get("bcs", {}).items():
        spec, disp = _bc(name, t)
        if spec is not None:
            conditions.append(spec)
        else:
            displacements.append(disp)

    solver_t = data.get("solver", {})
    _keys(solver_t, _SOLVER, "solver")
    options = SolveOptions(**solver_t)
    case = CaseDefinition(case_t.get("name", Path(source).stem), patches, conditions,
                          {"source": str(source)}, quadrature=splines.get("quadrature"),
                          energy_convention=convention, displacement_edges=displacements)
    return case, options


def load_config(path):
    """Parse a TOML problem file; every failure surfaces as ConfigurationError."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"configuration file not found: {path}") from None
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    try:
        return case_from_mapping(data, str(path))
    except ConfigurationError:
        raise
    except (AirySplineError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


__all__ = ["case_from_mapping", "load_config"]
