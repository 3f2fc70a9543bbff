"""Stresses from the spline stress function and complementary-energy assembly.

All stress quantities are affine in the control values ``c`` of a patch and are
returned as operator pairs ``(B, s0)`` with ``sigma = B @ c + s0``. The
``B`` rows come from the physical Hessian of the stress function::

    phi_{,ij} = sum_ab G[a,i] G[b,j] phi_hat_{,ab} + sum_a xi_{a,ij} phi_hat_{,a}

with ``G = J^-1`` and ``xi_{a,ij}`` the inverse-coordinate Hessians, and the
Airy relations ``sigma_xx = phi_yy + V``, ``sigma_yy = phi_xx + V``,
``sigma_xy = -phi_xy``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import kernels
from .errors import ConfigurationError, DegenerateMappingError
from .geometry import EdgeRef, GeometricMapping, edge_frame, inverse_hessian_tensor, inverse_jacobian, map_point
from .materials import NO_BODY_FORCE, BodyForcePotential, ComplianceModel, energy_weight_batch
from .splines import ControlNet, basis_derivatives


@dataclass(frozen=True, eq=False)
class Patch:
    """One mapped patch carrying its own stress-function discretisation."""

    name: str
    mapping: GeometricMapping
    net: ControlNet
    material: ComplianceModel
    potential: BodyForcePotential = NO_BODY_FORCE

    def __post_init__(self):
        self.net.require_stress_degrees()

    @property
    def ndof(self) -> int:
        n, m = self.net.shape
        return n * m


class GlobalDofMap:
    """Bijection between per-patch control grids and ``0 .. N-1``.

    Control value ``(i, j)`` of a patch with ``m`` columns sits at
    ``offset + i * m + j``.
    """

    def __init__(self, patches: Sequence[Patch]):
        self.patches = {}
        self.offsets = {}
        off = 0
        for p in patches:
            if p.name in self.patches:
                raise ConfigurationError(f"duplicate patch name {p.name!r}")
            self.patches[p.name] = p
            self.offsets[p.name] = off
            off += p.ndof
        self.total = off

    def __len__(self):
        return self.total

    def slice(self, name: str) -> slice:
        off = self.offsets[name]
        return slice(off, off + self.patches[name].ndof)

    def index(self, name: str, i: int, j: int) -> int:
        n, m = self.patches[name].net.shape
        if not (0 <= i < n and 0 <= j < m):
            raise IndexError(f"control index ({i}, {j}) outside {n}x{m} net")
        return self.offsets[name] + i * m + j

    def patch_values(self, name: str, vector) -> np.ndarray:
        return np.asarray(vector)[self.slice(name)].reshape(self.patches[name].net.shape)

    def net(self, name: str, vector) -> ControlNet:
        return self.patches[name].net.with_values(self.patch_values(name, vector))


@dataclass(eq=False)
class QuadraticForm:
    """``value(c) = 0.5 c^T H c + g^T c + const`` over the global control vector."""

    H: np.ndarray
    g: np.ndarray
    c: float = 0.0
    label: str = field(default="", compare=False)

    @classmethod
    def zeros(cls, n: int, label: str = "") -> "QuadraticForm":
        return cls(np.zeros((n, n)), np.zeros(n), 0.0, label)

    @property
    def size(self) -> int:
        return self.g.size

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.g @ x + self.c)

    def gradient(self, x) -> np.ndarray:
        return self.H @ np.asarray(x, dtype=float) + self.g

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.H + other.H, self.g + other.g, self.c + other.c, self.label)

    def scaled(self, w: float) -> "QuadraticForm":
        return QuadraticForm(w * self.H, w * self.g, w * self.c, self.label)

    def symmetry_error(self) -> float:
        scale = max(np.abs(self.H).max(), np.finfo(float).tiny)
        return float(np.abs(self.H - self.H.T).max() / scale)


class LeastSquaresForm(QuadraticForm):
    """Quadratic form known as a sum of squares ``|R c + r0|^2``.

    ``value`` evaluates the squares directly, which avoids the cancellation of
    ``0.5 c^T H c + g^T c + const`` near a zero residual.
    """

    def __init__(self, R, r0, label: str = ""):
        R = np.atleast_2d(np.asarray(R, dtype=float))
        r0 = np.atleast_1d(np.asarray(r0, dtype=float))
        H = 2.0 * R.T @ R
        super().__init__(0.5 * (H + H.T), 2.0 * R.T @ r0, float(r0 @ r0), label)
        self.R = R
        self.r0 = r0

    def value(self, x) -> float:
        r = self.R @ np.asarray(x, dtype=float) + self.r0
        return float(r @ r)

    def scaled(self, w: float) -> "LeastSquaresForm":
        if w < 0:
            return super().scaled(w)
        k = float(np.sqrt(w))
        return LeastSquaresForm(k * self.R, k * self.r0, self.label)


def sum_forms(forms: Iterable[QuadraticForm], n: int) -> QuadraticForm:
    total = QuadraticForm.zeros(n)
    for f in forms:  # fixed order keeps results bit-identical between runs
        total = total + f
    return total


# ---------------------------------------------------------------------------
# pointwise operators


def _derivative_rows(net: ControlNet, xi, eta):
    """Rows for phi_hat derivatives ``d^a/dxi^a d^b/deta^b``, keyed by (a, b)."""
    Bx = basis_derivatives(net.knots_xi, xi, 2)
    Be = basis_derivatives(net.knots_eta, eta, 2)
    npts = Bx.shape[1]
    n, m = net.shape

    def row(a, b):
        return (Bx[a][:, :, None] * Be[b][:, None, :]).reshape(npts, n * m)

    return {ab: row(*ab) for ab in ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))}


def physical_hessian_rows(net: ControlNet, mapping: GeometricMapping, xi, eta):
    """``(phi_xx, phi_xy, phi_yy)`` coefficient rows, each of shape ``(npts, n*m)``."""
    net.require_stress_degrees()
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    rows = _derivative_rows(net, xi, eta)
    G = inverse_jacobian(mapping, xi, eta)
    T = inverse_hessian_tensor(mapping, xi, eta)
    hpar = {(0, 0): rows[2, 0], (0, 1): rows[1, 1], (1, 0): rows[1, 1], (1, 1): rows[0, 2]}
    grad = (rows[1, 0], rows[0, 1])
    out = []
    for i, j in ((0, 0), (0, 1), (1, 1)):
        acc = np.zeros_like(rows[0, 0])
        for a in range(2):
            for b in range(2):
                acc += (G[:, a, i] * G[:, b, j])[:, None] * hpar[a, b]
            acc += T[:, a, i, j][:, None] * grad[a]
        out.append(acc)
    return tuple(out)


def physical_hessian(net: ControlNet, mapping: GeometricMapping, xi: float, eta: float) -> np.ndarray:
    """Coefficient vectors of ``(phi_xx, phi_xy, phi_yy)`` at one point, shape ``(3, n*m)``.

    The physical Hessian entries are ``physical_hessian(...) @ net.values.ravel()``.
    """
    rows = physical_hessian_rows(net, mapping, xi, eta)
    return np.vstack([r[0] for r in rows])


def stress_operator(patch: Patch, xi, eta):
    """``(B, s0, points)`` with ``sigma = B @ c + s0`` at each parametric point.

    ``B`` has shape ``(npts, 3, n*m)``; components are (xx, yy, xy).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    pxx, pxy, pyy = physical_hessian_rows(patch.net, patch.mapping, xi, eta)
    B = np.stack([pyy, pxx, -pxy], axis=1)
    x, y = map_point(patch.mapping, xi, eta)
    V = np.broadcast_to(patch.potential.value(x, y), xi.shape)
    s0 = np.stack([V, V, np.zeros_like(V)], axis=-1)
    return B, s0, np.stack([np.broadcast_to(x, xi.shape), np.broadcast_to(y, xi.shape)], axis=-1)


@dataclass(frozen=True)
class StressSample:
    x: float
    y: float
    sigma_xx: float
    sigma_yy: float
    sigma_xy: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.sigma_xx, self.sigma_yy, self.sigma_xy])


def stress_at(patch: Patch, xi: float, eta: float, values=None):
    """Stress sample at one point plus its affine form ``(B, s0)`` in the patch's controls.

    ``values`` defaults to the control values stored in ``patch.net``.
    """
    B, s0, pts = stress_operator(patch, xi, eta)
    c = patch.net.values.ravel() if values is None else np.asarray(values, dtype=float).ravel()
    sig = B[0] @ c + s0[0]
    sample = StressSample(float(pts[0, 0]), float(pts[0, 1]), *map(float, sig))
    return sample, (B[0], s0[0])


def stress_field(patch: Patch, values, xi, eta) -> np.ndarray:
    """Stresses ``(npts, 3)`` for control values ``values`` of this patch."""
    B, s0, _ = stress_operator(patch, xi, eta)
    return np.einsum("qcj,j->qc", B, np.asarray(values, dtype=float).ravel()) + s0


# ---------------------------------------------------------------------------
# quadrature


def gauss_rule_1d(knots, npts: int):
    """Gauss-Legendre points and weights with ``npts`` points on every knot span."""
    gp, gw = np.polynomial.legendre.leggauss(int(npts))
    pts, wts = [], []
    for a, b in knots.spans():
        h = 0.5 * (b - a)
        pts.append(a + h * (gp + 1.0))
        wts.append(h * gw)
    return np.concatenate(pts), np.concatenate(wts)


def quadrature_orders(patch: Patch, quadrature=None):
    """Gauss points per knot span ``(kx, ke)``; ``(p + 1, q + 1)`` unless overridden."""
    p, q = patch.net.degrees
    if quadrature is None:
        return p + 1, q + 1
    if np.ndim(quadrature) == 0:
        k = int(quadrature)
        return k, k
    kx, ke = quadrature
    return int(kx), int(ke)


def patch_quadrature(patch: Patch, quadrature=None):
    """Tensor Gauss rule on the patch: ``(xi, eta, weights)`` with ``|det J|`` included."""
    kx, ke = quadrature_orders(patch, quadrature)
    if kx < 1 or ke < 1:
        raise ConfigurationError("quadrature order must be positive")
    ux, wx = gauss_rule_1d(patch.net.knots_xi, kx)
    ue, we = gauss_rule_1d(patch.net.knots_eta, ke)
    XI, ETA = np.meshgrid(ux, ue, indexing="ij")
    WW = np.outer(wx, we)
    xi, eta, w = XI.ravel(), ETA.ravel(), WW.ravel()
    J = inverse_jacobian(patch.mapping, xi, eta)  # raises on degenerate points
    detJ = 1.0 / np.abs(J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0])
    return xi, eta, w * detJ


def edge_quadrature(patch: Patch, edge: EdgeRef, npts: int | None = None):
    """Gauss rule in the edge parameter ``s``; default ``max(p, q) + 2`` points per span."""
    p, q = patch.net.degrees
    k = max(p, q) + 2 if npts is None else int(npts)
    knots = patch.net.knots_eta if edge.along == 1 else patch.net.knots_xi
    u, w = gauss_rule_1d(knots, k)
    s = 1.0 - u if edge.reversed else u
    order = np.argsort(s, kind="stable")
    return s[order], w[order]


def traction_operator(patch: Patch, edge: EdgeRef, s):
    """Traction ``t = sigma . n`` along an edge as ``(A, a0, points, normals, dgamma)``.

    ``A`` has shape ``(npts, 2, n*m)``; ``dgamma`` is the arc-length factor
    ``|dT/ds|`` converting ``ds`` to ``dGamma``.
    """
    if edge.patch != patch.name:
        raise ConfigurationError(f"edge {edge} does not belong to patch {patch.name!r}")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    pts, normal, dgamma = edge_frame(patch.mapping, edge, s)
    xi, eta = edge.parametric(s)
    B, s0, _ = stress_operator(patch, xi, eta)
    nx, ny = normal[:, 0], normal[:, 1]
    A = np.stack([B[:, 0] * nx[:, None] + B[:, 2] * ny[:, None],
                  B[:, 2] * nx[:, None] + B[:, 1] * ny[:, None]], axis=1)
    a0 = np.stack([s0[:, 0] * nx + s0[:, 2] * ny, s0[:, 2] * nx + s0[:, 1] * ny], axis=1)
    return A, a0, pts, normal, dgamma


# ---------------------------------------------------------------------------
# energy forms


def internal_energy_form(patches: Sequence[Patch], dof_map: GlobalDofMap, quadrature=None,
                         convention: str = "tensor") -> QuadraticForm:
    """``U*(c) = 0.5 * integral sigma^T W sigma dOmega`` as a quadratic form.

    ``convention`` selects ``W`` (see :func:`~airyspline.materials.energy_weight_batch`).
    """
    total = QuadraticForm.zeros(dof_map.total, "internal energy")
    for patch in patches:
        xi, eta, w = patch_quadrature(patch, quadrature)
        B, s0, pts = stress_operator(patch, xi, eta)
        W = energy_weight_batch(patch.material, pts[:, 0], pts[:, 1], convention)
        H, g, c = kernels.accumulate_quadratic(B, W, s0, w)
        sl = dof_map.slice(patch.name)
        total.H[sl, sl] += 0.5 * (H + H.T)
        total.g[sl] += g
        total.c += c
    return total


Displacement = Union[Sequence[float], Callable]


def _displacement_values(u_hat, s, pts):
    if callable(u_hat):
        vals = np.array([u_hat(si, xy[0], xy[1]) for si, xy in zip(s, pts)], dtype=float)
    else:
        vals = np.broadcast_to(np.asarray(u_hat, dtype=float), (len(s), 2))
    return vals


def external_energy_form(displacement_edges, patches: Sequence[Patch], dof_map: GlobalDofMap) -> QuadraticForm:
    """``W*(c) = -integral u_hat . t dGamma`` over displacement edges (linear form).

    ``displacement_edges`` is a list of ``(EdgeRef, u_hat)`` where ``u_hat`` is a
    constant 2-vector or a callable ``(s, x, y) -> (ux, uy)``.
    """
    total = QuadraticForm.zeros(dof_map.total, "external energy")
    by_name = {p.name: p for p in patches}
    for edge, u_hat in displacement_edges:
        patch = by_name[edge.patch]
        s, w = edge_quadrature(patch, edge)
        A, a0, pts, _, dgamma = traction_operator(patch, edge, s)
        u = _displacement_values(u_hat, s, pts)
        ww = w * dgamma
        total.g[dof_map.slice(patch.name)] -= np.einsum("q,qk,qkj->j", ww, u, A)
        total.c -= float(np.einsum("q,qk,qk->", ww, u, a0))
    return total


__all__ = [
    "GlobalDofMap",
    "LeastSquaresForm",
    "Patch",
    "QuadraticForm",
    "StressSample",
    "edge_quadrature",
    "external_energy_form",
    "gauss_rule_1d",
    "internal_energy_form",
    "patch_quadrature",
    "quadrature_orders",
    "physical_hessian",
    "physical_hessian_rows",
    "stress_at",
    "stress_field",
    "stress_operator",
    "sum_forms",
    "traction_operator",
]
