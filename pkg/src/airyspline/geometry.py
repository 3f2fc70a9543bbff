"""Geometric mappings from the unit square to physical patches.

Every built-in mapping is a polynomial of bi-degree at most 3 in ``(xi, eta)``,
stored as coefficient tables ``cx[k, l]``, ``cy[k, l]`` multiplying
``xi**k * eta**l``. First and second derivatives are therefore exact.

Orientation is never assumed: the bar and beam maps flip the ``eta`` axis and
have negative Jacobian determinant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigurationError, DegenerateMappingError, DomainError

MAPPING_KINDS = (
    "identity",
    "rectangle",
    "bar",
    "beam",
    "bilayer-bottom",
    "bilayer-top",
    "parabolic",
    "general-analytic",
)

SIDES = ("xi=0", "xi=1", "eta=0", "eta=1")

_MAX_DEG = 3


def _table(c) -> np.ndarray:
    c = np.atleast_2d(np.asarray(c, dtype=float))
    if c.shape[0] > _MAX_DEG + 1 or c.shape[1] > _MAX_DEG + 1:
        raise ConfigurationError(
            f"polynomial mapping limited to bi-degree {_MAX_DEG}, got table {c.shape}"
        )
    out = np.zeros((_MAX_DEG + 1, _MAX_DEG + 1))
    out[: c.shape[0], : c.shape[1]] = c
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GeometricMapping:
    """Polynomial map ``T(xi, eta) = (x, y)``."""

    kind: str
    x_coeffs: np.ndarray
    y_coeffs: np.ndarray
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MAPPING_KINDS:
            raise ConfigurationError(f"unknown mapping kind {self.kind!r}")
        object.__setattr__(self, "x_coeffs", _table(self.x_coeffs))
        object.__setattr__(self, "y_coeffs", _table(self.y_coeffs))
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))
        # derivative tables, indexed by (d_xi order, d_eta order)
        ders = {}
        for a in range(3):
            for b in range(3 - a):
                cx = P.polyder(P.polyder(self.x_coeffs, a, axis=0), b, axis=1) if (a or b) else self.x_coeffs
                cy = P.polyder(P.polyder(self.y_coeffs, a, axis=0), b, axis=1) if (a or b) else self.y_coeffs
                ders[a, b] = (cx, cy)
        object.__setattr__(self, "_ders", ders)

    def _eval(self, a, b, xi, eta):
        cx, cy = self._ders[a, b]
        return P.polyval2d(xi, eta, cx), P.polyval2d(xi, eta, cy)

    @property
    def corners(self) -> np.ndarray:
        """Physical images of (0,0), (1,0), (1,1), (0,1)."""
        u = np.array([0.0, 1.0, 1.0, 0.0])
        v = np.array([0.0, 0.0, 1.0, 1.0])
        return np.column_stack(self._eval(0, 0, u, v))

    @property
    def scale(self) -> float:
        """Characteristic length: diagonal of the bounding box of a coarse sample."""
        s = np.linspace(0.0, 1.0, 5)
        u, v = np.meshgrid(s, s)
        x, y = self._eval(0, 0, u, v)
        return float(np.hypot(np.ptp(x), np.ptp(y)))

    def __repr__(self):
        params = ", ".join(f"{k}={v:g}" for k, v in self.parameters.items())
        return f"GeometricMapping({self.kind}: {params})"


# ---------------------------------------------------------------------------
# constructors


def identity_mapping() -> GeometricMapping:
    return GeometricMapping("identity", [[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0]])


def rectangle(x0: float, y0: float, width: float, height: float) -> GeometricMapping:
    return GeometricMapping(
        "rectangle",
        [[x0, 0.0], [width, 0.0]],
        [[y0, height]],
        {"x0": x0, "y0": y0, "width": width, "height": height},
    )


def bar(l: float, c: float) -> GeometricMapping:
    """Vertical bar, ``y`` pointing down: ``(xi c, (1 - eta) l)``."""
    return GeometricMapping("bar", [[0.0], [c]], [[l, -l]], {"l": l, "c": c})


def beam(l: float, c: float) -> GeometricMapping:
    """Beam of length ``2l`` and height ``2c`` centred at the origin."""
    return GeometricMapping(
        "beam", [[-l], [2.0 * l]], [[c, -2.0 * c]], {"l": l, "c": c}
    )


def bilayer_bottom(L: float, H1: float) -> GeometricMapping:
    return GeometricMapping("bilayer-bottom", [[0.0], [L]], [[0.0, H1]], {"L": L, "H1": H1})


def bilayer_top(L: float, H1: float, H2: float) -> GeometricMapping:
    return GeometricMapping(
        "bilayer-top", [[0.0], [L]], [[H1, H2]], {"L": L, "H1": H1, "H2": H2}
    )


def parabolic(L: float, H0: float) -> GeometricMapping:
    """Cantilever with horizontal top edge and parabolic bottom edge.

    ``y = H0/4 (2 eta + (1 - eta)(-2 xi^2 + 4 xi - 2) - 1)``; height ``H0`` at
    ``xi = 0`` and ``H0 / 2`` at ``xi = 1``.
    """
    k = H0 / 4.0
    # expand: k * (2eta - 2 + 4xi - 2xi^2 + 2eta - 4 xi eta + 2 xi^2 eta - 1)
    cy = np.zeros((3, 2))
    cy[0, 0] = -3.0 * k
    cy[0, 1] = 4.0 * k
    cy[1, 0] = 4.0 * k
    cy[1, 1] = -4.0 * k
    cy[2, 0] = -2.0 * k
    cy[2, 1] = 2.0 * k
    return GeometricMapping("parabolic", [[0.0], [L]], cy, {"L": L, "H0": H0})


def general_analytic(x_coeffs, y_coeffs) -> GeometricMapping:
    return GeometricMapping("general-analytic", x_coeffs, y_coeffs)


_FACTORIES = {
    "identity": identity_mapping,
    "rectangle": rectangle,
    "bar": bar,
    "beam": beam,
    "bilayer-bottom": bilayer_bottom,
    "bilayer-top": bilayer_top,
    "parabolic": parabolic,
    "general-analytic": general_analytic,
}


def make_mapping(kind: str, **params) -> GeometricMapping:
    """Build a mapping by kind name, e.g. ``make_mapping("beam", l=3, c=0.25)``."""
    try:
        factory = _FACTORIES[kind]
    except KeyError:
        raise ConfigurationError(f"unknown mapping kind {kind!r}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for mapping {kind!r}: {exc}") from None


# ---------------------------------------------------------------------------
# evaluation


def _check(xi, eta):
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    for v, name in ((xi, "xi"), (eta, "eta")):
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12) or np.any(~np.isfinite(v)):
            raise DomainError(f"{name} outside [0, 1]")
    return xi, eta


def map_point(mapping: GeometricMapping, xi, eta):
    xi, eta = _check(xi, eta)
    x, y = mapping._eval(0, 0, xi, eta)
    if np.ndim(x) == 0:
        return float(x), float(y)
    return x, y


def jacobian_batch(mapping: GeometricMapping, xi, eta) -> np.ndarray:
    """``J`` at many points, shape ``(..., 2, 2)``; rows (x, y), columns (xi, eta)."""
    xx, yx = mapping._eval(1, 0, xi, eta)
    xe, ye = mapping._eval(0, 1, xi, eta)
    J = np.empty(np.shape(xx) + (2, 2))
    J[..., 0, 0] = xx
    J[..., 0, 1] = xe
    J[..., 1, 0] = yx
    J[..., 1, 1] = ye
    return J


def _guard(mapping, det):
    tol = 1e-12 * mapping.scale ** 2
    if np.any(np.abs(det) < tol):
        raise DegenerateMappingError(f"Jacobian determinant below {tol:.3g} for {mapping!r}")


def jacobian(mapping: GeometricMapping, xi, eta) -> np.ndarray:
    xi, eta = _check(xi, eta)
    J = jacobian_batch(mapping, xi, eta)
    _guard(mapping, np.linalg.det(J))
    return J


def inverse_jacobian(mapping: GeometricMapping, xi, eta) -> np.ndarray:
    """``J^-1``: rows (xi, eta), columns (x, y)."""
    J = jacobian(mapping, xi, eta)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    G = np.empty_like(J)
    G[..., 0, 0] = J[..., 1, 1] / det
    G[..., 0, 1] = -J[..., 0, 1] / det
    G[..., 1, 0] = -J[..., 1, 0] / det
    G[..., 1, 1] = J[..., 0, 0] / det
    return G


def inverse_hessian_tensor(mapping: GeometricMapping, xi, eta) -> np.ndarray:
    """Second derivatives of the inverse coordinates, shape ``(..., 2, 2, 2)``.

    Entry ``[a, i, j]`` is ``d^2 xi_a / dx_i dx_j``. From ``d(J^-1) = -J^-1 dJ J^-1``:
    ``d^2 xi_a / dx_i dx_j = -sum_b (G dJ_b G)[a, i] G[b, j]`` with ``G = J^-1`` and
    ``dJ_b = dJ / d xi_b``.
    """
    G = inverse_jacobian(mapping, xi, eta)
    dJ = np.empty(G.shape[:-2] + (2, 2, 2))  # [..., b, row, col]
    for b, (da, db) in enumerate(((1, 0), (0, 1))):
        for col, (ea, eb) in enumerate(((1, 0), (0, 1))):
            x_d, y_d = mapping._eval(da + ea, db + eb, xi, eta)
            dJ[..., b, 0, col] = x_d
            dJ[..., b, 1, col] = y_d
    # dG_b = -G dJ_b G
    dG = -np.einsum("...ar,...brs,...si->...bai", G, dJ, G)
    return np.einsum("...bai,...bj->...aij", dG, G)


def inverse_hessians(mapping: GeometricMapping, xi, eta):
    """``(xi_xx, xi_xy, xi_yy, eta_xx, eta_xy, eta_yy)`` at one point."""
    T = inverse_hessian_tensor(mapping, xi, eta)
    vals = (T[..., 0, 0, 0], T[..., 0, 0, 1], T[..., 0, 1, 1],
            T[..., 1, 0, 0], T[..., 1, 0, 1], T[..., 1, 1, 1])
    if np.ndim(vals[0]) == 0:
        return tuple(float(v) for v in vals)
    return vals


def inverse_map(mapping: GeometricMapping, x: float, y: float, guess=(0.5, 0.5),
                tol: float = 1e-14, maxiter: int = 50):
    """Newton solve of ``T(xi, eta) = (x, y)``; raises DomainError if outside the patch."""
    u = np.array(guess, dtype=float)
    target = np.array([x, y], dtype=float)
    scale = mapping.scale
    for _ in range(maxiter):
        r = np.array(mapping._eval(0, 0, u[0], u[1])) - target
        if np.linalg.norm(r) <= tol * scale:
            break
        J = jacobian_batch(mapping, u[0], u[1])
        u = u - np.linalg.solve(J, r)
    r = np.array(mapping._eval(0, 0, u[0], u[1])) - target
    if np.linalg.norm(r) > 1e-10 * scale:
        raise DomainError(f"inverse mapping did not converge for ({x}, {y})")
    if np.any(u < -1e-10) or np.any(u > 1 + 1e-10):
        raise DomainError(f"point ({x}, {y}) lies outside {mapping!r}")
    return float(np.clip(u[0], 0, 1)), float(np.clip(u[1], 0, 1))


# ---------------------------------------------------------------------------
# edges


@dataclass(frozen=True)
class EdgeRef:
    """A full parametric edge of a patch.

    ``reversed`` flips the traversal direction of the edge parameter ``s``.
    """

    patch: str
    side: str
    reversed: bool = False

    def __post_init__(self):
        if self.side not in SIDES:
            raise ConfigurationError(f"edge side must be one of {SIDES}, got {self.side!r}")

    def parametric(self, s):
        """Map edge parameter ``s`` in [0, 1] to ``(xi, eta)``."""
        s = np.asarray(s, dtype=float)
        if self.reversed:
            s = 1.0 - s
        fixed = np.full_like(s, 0.0 if self.side.endswith("0") else 1.0)
        if self.side.startswith("xi"):
            return fixed, s
        return s, fixed

    @property
    def along(self) -> int:
        """Index of the parametric direction running along the edge."""
        return 1 if self.side.startswith("xi") else 0


def edge_frame(mapping: GeometricMapping, edge: EdgeRef, s):
    """Physical points, outward unit normals and arc-length factors along an edge.

    The normal is the tangent rotated by 90 degrees, signed so that it points
    away from the patch interior (opposite to the transversal derivative on
    ``*=0`` sides, along it on ``*=1`` sides).
    """
    xi, eta = edge.parametric(s)
    J = jacobian_batch(mapping, xi, eta)
    tangent = J[..., :, edge.along]
    transversal = J[..., :, 1 - edge.along]
    length = np.linalg.norm(tangent, axis=-1)
    if np.any(length < 1e-12 * mapping.scale):
        raise DegenerateMappingError(f"edge {edge} has a vanishing tangent")
    normal = np.stack([tangent[..., 1], -tangent[..., 0]], axis=-1) / length[..., None]
    sign = np.sign(np.sum(normal * transversal, axis=-1))
    if np.any(sign == 0):
        raise DegenerateMappingError(f"edge {edge} is tangent to the transversal direction")
    if edge.side.endswith("0"):
        sign = -sign
    normal = normal * sign[..., None]
    x, y = mapping._eval(0, 0, xi, eta)
    return np.stack([x, y], axis=-1), normal, length


__all__ = [
    "EdgeRef",
    "GeometricMapping",
    "MAPPING_KINDS",
    "SIDES",
    "bar",
    "beam",
    "bilayer_bottom",
    "bilayer_top",
    "edge_frame",
    "general_analytic",
    "identity_mapping",
    "inverse_hessian_tensor",
    "inverse_hessians",
    "inverse_jacobian",
    "inverse_map",
    "jacobian",
    "jacobian_batch",
    "make_mapping",
    "map_point",
    "parabolic",
    "rectangle",
]
