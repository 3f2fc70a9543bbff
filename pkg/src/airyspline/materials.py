"""Plane-stress compliance models and body-force potentials.

Stress vectors are ordered ``(sigma_xx, sigma_yy, sigma_xy)``. Each compliance
model records which shear-strain measure its matrix produces:

* ``"tensor"``: third strain component is ``eps_xy`` (isotropic plane stress,
  shear entry ``(1 + nu) / E``);
* ``"engineering"``: third component is ``gamma_xy = 2 eps_xy`` (rotated
  orthotropic ``R^T D R`` with ``1 / G12`` in ``D``).

:func:`energy_form_matrix` converts either to the symmetric matrix ``W`` with
``sigma^T W sigma = S_ijkl sigma_ij sigma_kl``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, InvalidMaterialError

_SQRT2 = math.sqrt(2.0)


class ComplianceModel:
    """Position-dependent 3x3 compliance in vector stress convention."""

    kind: str
    shear_convention: str

    def compliance_batch(self, x, y) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class IsotropicPlaneStress(ComplianceModel):
    E: float
    nu: float

    kind = "isotropic-plane-stress"
    shear_convention = "tensor"

    def __post_init__(self):
        if not self.E > 0:
            raise InvalidMaterialError(f"Young's modulus must be positive, got {self.E}")
        if not -1.0 < self.nu <= 0.5:
            raise InvalidMaterialError(f"Poisson ratio {self.nu} outside (-1, 0.5]")

    def matrix(self) -> np.ndarray:
        E, nu = self.E, self.nu
        return np.array([[1.0, -nu, 0.0], [-nu, 1.0, 0.0], [0.0, 0.0, 1.0 + nu]]) / E

    def compliance_batch(self, x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.broadcast_to(self.matrix(), shape + (3, 3)).copy()


def rotation_matrix(theta: float) -> np.ndarray:
    """Stress transformation to axes rotated by ``theta`` (radians)."""
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    sn, cs = math.sin(2 * theta), math.cos(2 * theta)
    return np.array([[c2, s2, sn], [s2, c2, -sn], [-sn / 2, sn / 2, cs]])


@dataclass(frozen=True)
class OrthotropicLayer:
    E11: float
    E22: float
    G12: float
    nu: float
    theta_deg: float = 0.0

    def __post_init__(self):
        for name in ("E11", "E22", "G12"):
            if not getattr(self, name) > 0:
                raise InvalidMaterialError(f"{name} must be positive")

    def principal_matrix(self) -> np.ndarray:
        E11, E22, G12, nu = self.E11, self.E22, self.G12, self.nu
        return np.array([[1 / E11, -nu / E11, 0.0], [-nu / E11, 1 / E22, 0.0], [0.0, 0.0, 1 / G12]])

    def matrix(self) -> np.ndarray:
        R = rotation_matrix(math.radians(self.theta_deg))
        return R.T @ self.principal_matrix() @ R


@dataclass(frozen=True)
class RotatedOrthotropicLayered(ComplianceModel):
    """Stack of orthotropic layers separated by horizontal interfaces.

    ``bounds`` has one more entry than ``layers``; layer ``k`` occupies
    ``(bounds[k], bounds[k+1]]`` (the lowest layer also owns ``bounds[0]``), so a
    point exactly on an interface belongs to the lower layer.
    """

    layers: Sequence[OrthotropicLayer]
    bounds: Sequence[float]

    kind = "rotated-orthotropic-layered"
    shear_convention = "engineering"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if len(self.bounds) != len(self.layers) + 1 or not self.layers:
            raise ConfigurationError("need len(bounds) == len(layers) + 1 >= 2")
        if any(b1 <= b0 for b0, b1 in zip(self.bounds, self.bounds[1:])):
            raise ConfigurationError("layer bounds must be strictly increasing")
        object.__setattr__(self, "_mats", np.array([ly.matrix() for ly in self.layers]))

    @classmethod
    def single(cls, layer: OrthotropicLayer) -> "RotatedOrthotropicLayered":
        return cls([layer], [-math.inf, math.inf])

    def layer_index(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        b = np.asarray(self.bounds)
        span = b[-1] - b[0] if np.isfinite(b[-1] - b[0]) else 1.0
        tol = 1e-12 * span
        if np.any(y < b[0] - tol) or np.any(y > b[-1] + tol):
            raise DomainError(f"y outside layered material range [{b[0]}, {b[-1]}]")
        idx = np.searchsorted(b[1:-1], y, side="left")
        return idx

    def compliance_batch(self, x, y):
        y = np.broadcast_to(np.asarray(y, dtype=float), np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return self._mats[self.layer_index(y)]


def compliance_at(model: ComplianceModel, x, y) -> np.ndarray:
    """Compliance matrix at ``(x, y)``; arrays give a ``(..., 3, 3)`` stack."""
    return model.compliance_batch(x, y)


def energy_form_batch(model: ComplianceModel, x, y) -> np.ndarray:
    S = model.compliance_batch(x, y)
    if model.shear_convention == "tensor":
        d = np.array([1.0, 1.0, _SQRT2])
        W = S * d[:, None] * d[None, :]
    elif model.shear_convention == "engineering":
        W = S.copy()
    else:  # pragma: no cover
        raise ConfigurationError(f"unknown shear convention {model.shear_convention!r}")
    return 0.5 * (W + np.swapaxes(W, -1, -2))


ENERGY_CONVENTIONS = ("tensor", "matrix")


def energy_weight_batch(model: ComplianceModel, x, y, convention: str = "tensor") -> np.ndarray:
    """Weight used by the energy quadrature.

    ``"tensor"`` is the exact contraction of :func:`energy_form_batch`;
    ``"matrix"`` contracts the stress vector with the compliance matrix as
    given, which for tensor-shear models counts the shear energy once.
    """
    if convention == "tensor":
        return energy_form_batch(model, x, y)
    if convention == "matrix":
        S = model.compliance_batch(x, y)
        return 0.5 * (S + np.swapaxes(S, -1, -2))
    raise ConfigurationError(f"energy convention must be one of {ENERGY_CONVENTIONS}, got {convention!r}")


def energy_form_matrix(model: ComplianceModel, x, y, check: bool = True) -> np.ndarray:
    """Symmetric ``W`` with ``0.5 sigma^T W sigma`` the complementary energy density."""
    W = energy_form_batch(model, x, y)
    if check:
        lam = np.linalg.eigvalsh(W)
        if np.any(lam[..., 0] <= 0):
            raise InvalidMaterialError("energy form is not positive definite")
    return W


# ---------------------------------------------------------------------------
# body-force potentials


@dataclass(frozen=True)
class BodyForcePotential:
    """``V`` with body force ``f = -grad V``.

    ``linear-gravity`` uses ``V = -rho g (d . (x, y))`` for a unit direction ``d``
    along which gravity acts (default ``+y``).
    """

    kind: str = "none"
    rho: float = 0.0
    g: float = 0.0
    direction: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("none", "linear-gravity"):
            raise ConfigurationError(f"unknown body-force kind {self.kind!r}")
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise ConfigurationError("gravity direction must be non-zero")
        object.__setattr__(self, "direction", tuple(float(v) for v in d / n))

    @property
    def _k(self):
        return self.rho * self.g if self.kind == "linear-gravity" else 0.0

    def value(self, x, y):
        dx, dy = self.direction
        return -self._k * (dx * np.asarray(x, dtype=float) + dy * np.asarray(y, dtype=float))

    def force(self, x, y):
        dx, dy = self.direction
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.full(shape, self._k * dx), np.full(shape, self._k * dy)


NO_BODY_FORCE = BodyForcePotential()


def potential_value(potential: BodyForcePotential, x, y):
    v = potential.value(x, y)
    return float(v) if np.ndim(v) == 0 else v


def body_force(potential: BodyForcePotential, x, y):
    fx, fy = potential.force(x, y)
    if np.ndim(fx) == 0:
        return float(fx), float(fy)
    return fx, fy


__all__ = [
    "BodyForcePotential",
    "ComplianceModel",
    "ENERGY_CONVENTIONS",
    "IsotropicPlaneStress",
    "NO_BODY_FORCE",
    "OrthotropicLayer",
    "RotatedOrthotropicLayered",
    "body_force",
    "compliance_at",
    "energy_form_batch",
    "energy_form_matrix",
    "energy_weight_batch",
    "potential_value",
    "rotation_matrix",
]
