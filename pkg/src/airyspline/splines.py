"""Univariate and tensor-product B-splines on open knot vectors.

Control values are stored as an ``(n, m)`` array indexed ``[i, j]`` with ``i``
running along ``xi`` and ``j`` along ``eta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import kernels
from .errors import DifferentiationError, DomainError, InvalidDiscretizationError

Direction = Literal["xi", "eta"]

_DOMAIN_TOL = 1e-12


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open knot vector on [0, 1] for a basis of fixed degree."""

    values: np.ndarray
    degree: int

    def __post_init__(self):
        vals = _readonly(self.values)
        object.__setattr__(self, "values", vals)
        p = int(self.degree)
        object.__setattr__(self, "degree", p)
        if p < 0:
            raise InvalidDiscretizationError(f"degree must be non-negative, got {p}")
        if vals.ndim != 1 or vals.size < 2 * (p + 1):
            raise InvalidDiscretizationError(
                f"knot vector of degree {p} needs at least {2 * (p + 1)} entries"
            )
        if np.any(np.diff(vals) < 0):
            raise InvalidDiscretizationError("knot vector must be non-decreasing")
        if vals[0] != 0.0 or vals[-1] != 1.0:
            raise InvalidDiscretizationError("knot vector must start at 0 and end at 1")
        if np.any(vals[: p + 1] != 0.0) or np.any(vals[-(p + 1):] != 1.0):
            raise InvalidDiscretizationError(
                f"knot vector is not open: first and last {p + 1} entries must repeat"
            )
        # multiplicity above p + 1 leaves a basis function with empty support
        _, counts = np.unique(vals[p + 1: vals.size - p - 1], return_counts=True)
        if counts.size and counts.max() > p + 1:
            raise InvalidDiscretizationError("interior knot multiplicity exceeds degree + 1")

    @property
    def count(self) -> int:
        """Number of basis functions."""
        return self.values.size - self.degree - 1

    def spans(self) -> np.ndarray:
        """Non-degenerate knot spans as an ``(k, 2)`` array of interval ends."""
        brk = np.unique(self.values)
        return np.column_stack([brk[:-1], brk[1:]])

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.degree, self.values.tobytes()))

    def __repr__(self):
        return f"KnotVector({self.values.tolist()}, degree={self.degree})"


def open_uniform_knots(degree: int, count: int) -> KnotVector:
    """Open knot vector with ``count - degree - 1`` equally spaced interior knots."""
    if degree < 0:
        raise InvalidDiscretizationError(f"degree must be non-negative, got {degree}")
    if count < degree + 1:
        raise InvalidDiscretizationError(
            f"{count} basis functions cannot support degree {degree}; need at least {degree + 1}"
        )
    n_interior = count - degree - 1
    interior = np.arange(1, n_interior + 1) / (n_interior + 1)
    vals = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    return KnotVector(vals, degree)


def _check_param(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u < -_DOMAIN_TOL) or np.any(u > 1 + _DOMAIN_TOL):
        raise DomainError(f"parametric coordinate {name} outside [0, 1]: {u}")
    return np.clip(u, 0.0, 1.0)


def basis_derivatives(knots: KnotVector, u, nders: int = 0) -> np.ndarray:
    """All basis functions and derivatives up to ``nders`` at the points ``u``.

    Returns shape ``(nders + 1, len(u), n)``.
    """
    pts = np.atleast_1d(_check_param(u))
    return kernels.collocation(knots.values, knots.degree, pts, nders)


def basis_values(knots: KnotVector, u) -> np.ndarray:
    """Values of all ``n`` basis functions at a single coordinate ``u``."""
    if np.ndim(u) != 0:
        raise DomainError("basis_values expects a scalar coordinate")
    return basis_derivatives(knots, u, 0)[0, 0]


@dataclass(frozen=True, eq=False)
class ControlNet:
    """Tensor-product B-spline surface: degrees, knot vectors and control values."""

    knots_xi: KnotVector
    knots_eta: KnotVector
    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(self.values)
        object.__setattr__(self, "values", vals)
        shape = (self.knots_xi.count, self.knots_eta.count)
        if vals.shape != shape:
            raise InvalidDiscretizationError(
                f"control values have shape {vals.shape}, knot vectors require {shape}"
            )

    @classmethod
    def uniform(cls, degrees, shape, values=None) -> "ControlNet":
        p, q = degrees
        n, m = shape
        kx = open_uniform_knots(p, n)
        ke = open_uniform_knots(q, m)
        if values is None:
            values = np.zeros((n, m))
        return cls(kx, ke, values)

    @property
    def degrees(self) -> tuple[int, int]:
        return self.knots_xi.degree, self.knots_eta.degree

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values) -> "ControlNet":
        return ControlNet(self.knots_xi, self.knots_eta, np.reshape(values, self.shape))

    def require_stress_degrees(self):
        p, q = self.degrees
        if p < 2 or q < 2:
            raise DifferentiationError(
                f"stress function needs degrees >= 2 in both directions, got ({p}, {q})"
            )


def surface_value(net: ControlNet, xi, eta) -> float:
    """Tensor-product value ``sum_ij N_i(xi) M_j(eta) c_ij``."""
    nx = basis_values(net.knots_xi, xi)
    ne = basis_values(net.knots_eta, eta)
    return float(nx @ net.values @ ne)


def difference_operator(knots: KnotVector) -> np.ndarray:
    """Matrix mapping control values to those of the first derivative.

    Row ``i`` implements ``p (c[i+1] - c[i]) / (t[i+p+1] - t[i+1])``, with zero
    rows where the knot span is degenerate (0/0 := 0).
    """
    p = knots.degree
    if p < 1:
        raise DifferentiationError("cannot differentiate a degree-0 basis")
    t = knots.values
    n = knots.count
    D = np.zeros((n - 1, n))
    for i in range(n - 1):
        den = t[i + p + 1] - t[i + 1]
        if den > 0:
            D[i, i] = -p / den
            D[i, i + 1] = p / den
    return D


def derivative_knots(knots: KnotVector) -> KnotVector:
    if knots.degree < 1:
        raise DifferentiationError("cannot differentiate a degree-0 basis")
    return KnotVector(knots.values[1:-1], knots.degree - 1)


def derivative_net(net: ControlNet, direction: Direction) -> ControlNet:
    """Control net of the partial derivative in ``direction``."""
    if direction == "xi":
        D = difference_operator(net.knots_xi)
        return ControlNet(derivative_knots(net.knots_xi), net.knots_eta, D @ net.values)
    if direction == "eta":
        D = difference_operator(net.knots_eta)
        return ControlNet(net.knots_xi, derivative_knots(net.knots_eta), net.values @ D.T)
    raise ValueError(f"direction must be 'xi' or 'eta', got {direction!r}")


def surface_partials(net: ControlNet, xi, eta):
    """``(value, d_xi, d_eta, d_xixi, d_xieta, d_etaeta)`` at one point."""
    net.require_stress_degrees()
    d_xi = derivative_net(net, "xi")
    d_eta = derivative_net(net, "eta")
    return (
        surface_value(net, xi, eta),
        surface_value(d_xi, xi, eta),
        surface_value(d_eta, xi, eta),
        surface_value(derivative_net(d_xi, "xi"), xi, eta),
        surface_value(derivative_net(d_xi, "eta"), xi, eta),
        surface_value(derivative_net(d_eta, "eta"), xi, eta),
    )


def greville(knots: KnotVector) -> np.ndarray:
    """Greville abscissae; control values ``a + b * greville`` reproduce ``a + b u``."""
    p = knots.degree
    t = knots.values
    if p == 0:
        return 0.5 * (t[:-1] + t[1:])
    return np.array([t[i + 1: i + p + 1].mean() for i in range(knots.count)])


__all__ = [
    "ControlNet",
    "KnotVector",
    "basis_derivatives",
    "basis_values",
    "derivative_knots",
    "derivative_net",
    "difference_operator",
    "greville",
    "open_uniform_knots",
    "surface_partials",
    "surface_value",
]
