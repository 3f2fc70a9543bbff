"""Boundary-condition residuals as quadratic forms, and strong constraints.

Weak conditions are squared residuals of affine traction functionals:

* ``traction-pointwise``: ``w * integral |t(c) - t_hat(s)|^2 dGamma``
* ``resultant-force``:    ``w * (integral t_i dGamma - F_i)^2``
* ``moment``:             ``w * (integral t_x y dGamma - M)^2``
* ``interface-coupling``: ``w * integral |t_A(c) + t_B(c)|^2 dGamma``

Each is returned as a :class:`~airyspline.physics.LeastSquaresForm` on the
global control vector, so reported residuals are sums of squares evaluated
directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConfigurationError, InfeasibleConstraintsError
from .geometry import EdgeRef, map_point
from .physics import GlobalDofMap, LeastSquaresForm, Patch, QuadraticForm, edge_quadrature, traction_operator
from .splines import ControlNet, derivative_knots, difference_operator

BC_KINDS = ("traction-pointwise", "resultant-force", "moment", "interface-coupling", "free")
COMPONENTS = {"x": (0,), "y": (1,), "both": (0, 1)}

TractionData = Union[Sequence[float], Callable]


@dataclass(frozen=True, eq=False)
class BoundaryConditionSpec:
    """One weak condition on an edge.

    ``target`` is a traction ``(tx, ty)`` or callable ``(s, x, y) -> (tx, ty)``
    for pointwise conditions and a scalar (or ``(Fx, Fy)`` with
    ``component="both"``) for resultants and moments. ``partner`` names the
    second edge of an interface coupling.
    """

    name: str
    edge: EdgeRef
    kind: str
    target: object = 0.0
    component: str = "both"
    weight: float = 1.0
    partner: EdgeRef | None = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ConfigurationError(f"unknown boundary condition kind {self.kind!r}")
        if self.component not in COMPONENTS:
            raise ConfigurationError(f"component must be x, y or both, got {self.component!r}")
        if self.weight < 0:
            raise ConfigurationError("weights must be non-negative")
        if self.kind == "interface-coupling":
            if self.partner is None:
                raise ConfigurationError(f"coupling {self.name!r} needs a partner edge")
            if self.partner.patch == self.edge.patch:
                raise ConfigurationError("coupled edges must belong to distinct patches")


def boundary_traction_functional(patch: Patch, edge: EdgeRef, s):
    """Traction at edge parameters ``s`` as affine functionals ``t = A c + a0``.

    Returns ``(A, a0)`` with shapes ``(npts, 2, n*m)`` and ``(npts, 2)``;
    scalar ``s`` drops the leading axis.
    """
    A, a0, *_ = traction_operator(patch, edge, s)
    if np.ndim(s) == 0:
        return A[0], a0[0]
    return A, a0


def _embed(dof_map: GlobalDofMap, name: str, A: np.ndarray) -> np.ndarray:
    out = np.zeros(A.shape[:-1] + (dof_map.total,))
    out[..., dof_map.slice(name)] = A
    return out


def _target_values(target, s, pts):
    if callable(target):
        return np.array([target(si, p[0], p[1]) for si, p in zip(s, pts)], dtype=float)
    return np.broadcast_to(np.asarray(target, dtype=float), (len(s), 2))


def _edge_data(spec: BoundaryConditionSpec, patches, dof_map):
    patch = _patch(patches, spec.edge.patch)
    s, w = edge_quadrature(patch, spec.edge)
    A, a0, pts, normal, dgamma = traction_operator(patch, spec.edge, s)
    return patch, s, w * dgamma, _embed(dof_map, patch.name, A), a0, pts


def _patch(patches, name) -> Patch:
    for p in patches:
        if p.name == name:
            return p
    raise ConfigurationError(f"unknown patch {name!r}")


def _least_squares_form(rows, resid0, weights, w, label) -> LeastSquaresForm:
    """``w * sum_q weights_q |rows_q c + resid0_q|^2`` with rows ``(nq, k, N)``."""
    k = np.sqrt(w * weights)
    R = (rows * k[:, None, None]).reshape(-1, rows.shape[-1])
    return LeastSquaresForm(R, (resid0 * k[:, None]).ravel(), label)


def traction_residual_form(spec: BoundaryConditionSpec, patches, dof_map: GlobalDofMap) -> QuadraticForm:
    if spec.kind != "traction-pointwise":
        raise ConfigurationError(f"{spec.name}: expected traction-pointwise, got {spec.kind}")
    _, s, ww, A, a0, pts = _edge_data(spec, patches, dof_map)
    comp = list(COMPONENTS[spec.component])
    t_hat = _target_values(spec.target, s, pts)
    return _least_squares_form(A[:, comp], (a0 - t_hat)[:, comp], ww, spec.weight, spec.name)


def _rank_one_forms(r, r0, targets, w, label):
    """``w * sum_k (r_k . c + r0_k - target_k)^2``: one rank-one square per component."""
    k = np.sqrt(w)
    return LeastSquaresForm(k * r, k * (r0 - targets), label)


def _targets(spec, ncomp):
    t = np.atleast_1d(np.asarray(spec.target, dtype=float))
    if t.size != ncomp:
        raise ConfigurationError(f"{spec.name}: expected {ncomp} target value(s), got {t.size}")
    return t


def resultant_residual_form(spec: BoundaryConditionSpec, patches, dof_map: GlobalDofMap) -> QuadraticForm:
    if spec.kind != "resultant-force":
        raise ConfigurationError(f"{spec.name}: expected resultant-force, got {spec.kind}")
    _, _, ww, A, a0, _ = _edge_data(spec, patches, dof_map)
    comp = list(COMPONENTS[spec.component])
    r = np.einsum("q,qkj->kj", ww, A)[comp]
    r0 = np.einsum("q,qk->k", ww, a0)[comp]
    return _rank_one_forms(r, r0, _targets(spec, len(comp)), spec.weight, spec.name)


def moment_residual_form(spec: BoundaryConditionSpec, patches, dof_map: GlobalDofMap) -> QuadraticForm:
    if spec.kind != "moment":
        raise ConfigurationError(f"{spec.name}: expected moment, got {spec.kind}")
    _, _, ww, A, a0, pts = _edge_data(spec, patches, dof_map)
    arm = ww * pts[:, 1]
    r = np.einsum("q,qj->j", arm, A[:, 0])[None]
    r0 = np.array([arm @ a0[:, 0]])
    return _rank_one_forms(r, r0, _targets(spec, 1), spec.weight, spec.name)


def interface_coupling_form(spec: BoundaryConditionSpec, patches, dof_map: GlobalDofMap) -> QuadraticForm:
    if spec.kind != "interface-coupling":
        raise ConfigurationError(f"{spec.name}: expected interface-coupling, got {spec.kind}")
    pa = _patch(patches, spec.edge.patch)
    pb = _patch(patches, spec.partner.patch)
    s, w = edge_quadrature(pa, spec.edge)
    partner = _matching_partner(pa, spec.edge, pb, spec.partner)
    A1, a1, _, _, dgamma = traction_operator(pa, spec.edge, s)
    A2, a2, *_ = traction_operator(pb, partner, s)
    rows = _embed(dof_map, pa.name, A1) + _embed(dof_map, pb.name, A2)
    return _least_squares_form(rows, a1 + a2, w * dgamma, spec.weight, spec.name)


def _matching_partner(pa, ea, pb, eb) -> EdgeRef:
    """Return ``eb`` oriented so that equal ``s`` gives equal physical points."""
    s = np.linspace(0.0, 1.0, 11)
    xa = np.column_stack(map_point(pa.mapping, *ea.parametric(s)))
    tol = 1e-9 * max(pa.mapping.scale, pb.mapping.scale)
    for cand in (eb, EdgeRef(eb.patch, eb.side, not eb.reversed)):
        xb = np.column_stack(map_point(pb.mapping, *cand.parametric(s)))
        if np.abs(xa - xb).max() <= tol:
            return cand
    raise ConfigurationError(f"edges {ea} and {eb} do not trace the same physical curve")


_BUILDERS = {
    "traction-pointwise": traction_residual_form,
    "resultant-force": resultant_residual_form,
    "moment": moment_residual_form,
    "interface-coupling": interface_coupling_form,
}


def residual_form(spec: BoundaryConditionSpec, patches, dof_map: GlobalDofMap) -> QuadraticForm | None:
    """Quadratic form for ``spec``; ``None`` for ``free`` edges."""
    if spec.kind == "free":
        return None
    return _BUILDERS[spec.kind](spec, patches, dof_map)


# ---------------------------------------------------------------------------
# strong constraints


@dataclass(frozen=True, eq=False)
class StrongConstraintSet:
    """Independent linear equalities ``A c = b`` on the control values."""

    A: np.ndarray
    b: np.ndarray
    raw_rows: int = field(default=0)

    @property
    def rank(self) -> int:
        return self.A.shape[0]

    def involved(self, tol: float = 1e-12) -> np.ndarray:
        """Indices of control values appearing in at least one constraint."""
        if self.A.size == 0:
            return np.array([], dtype=int)
        return np.flatnonzero(np.abs(self.A).max(axis=0) > tol * np.abs(self.A).max())


def derivative_operator(net: ControlNet, order: Sequence[str]) -> tuple[np.ndarray, tuple[int, int]]:
    """Matrix mapping ``vec(values)`` to ``vec`` of the derivative net, and its shape.

    ``order`` lists directions, e.g. ``("xi", "eta")`` for the mixed derivative.
    """
    Dx = np.eye(net.shape[0])
    De = np.eye(net.shape[1])
    kx, ke = net.knots_xi, net.knots_eta
    for d in order:
        if d == "xi":
            Dx = difference_operator(kx) @ Dx
            kx = derivative_knots(kx)
        elif d == "eta":
            De = difference_operator(ke) @ De
            ke = derivative_knots(ke)
        else:
            raise ConfigurationError(f"derivative direction must be xi or eta, got {d!r}")
    return np.kron(Dx, De), (Dx.shape[0], De.shape[0])


def edge_indices(shape, side: str) -> np.ndarray:
    """Flat indices of the control values lying on a side of an ``(n, m)`` grid."""
    n, m = shape
    grid = np.arange(n * m).reshape(n, m)
    return {"xi=0": grid[0, :], "xi=1": grid[-1, :], "eta=0": grid[:, 0], "eta=1": grid[:, -1]}[side]


def strong_constraints(net: ControlNet, prescribed, tol: float = 1e-10) -> StrongConstraintSet:
    """Linear constraints on ``net``'s control values from prescribed derivative-net values.

    ``prescribed`` is a list of ``(order, side, targets)``: ``order`` a tuple of
    directions, ``side`` the edge of the derivative net whose control values are
    fixed, and ``targets`` those values (scalar broadcasts).
    """
    rows, rhs = [], []
    for order, side, targets in prescribed:
        D, shape = derivative_operator(net, order)
        idx = edge_indices(shape, side)
        rows.append(D[idx])
        rhs.append(np.broadcast_to(np.asarray(targets, dtype=float), idx.shape))
    if not rows:
        return StrongConstraintSet(np.zeros((0, net.values.size)), np.zeros(0), 0)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(sv > tol * sv.max())) if sv.size else 0
    # consistency: b must lie in range(A)
    resid = b - U[:, :r] @ (U[:, :r].T @ b)
    if np.linalg.norm(resid) > tol * max(1.0, np.linalg.norm(b)):
        raise InfeasibleConstraintsError(
            f"prescribed derivative values are inconsistent (residual {np.linalg.norm(resid):.3g})"
        )
    A_red = sv[:r, None] * Vt[:r]
    b_red = U[:, :r].T @ b
    return StrongConstraintSet(A_red, b_red, A.shape[0])


__all__ = [
    "BC_KINDS",
    "BoundaryConditionSpec",
    "StrongConstraintSet",
    "boundary_traction_functional",
    "derivative_operator",
    "edge_indices",
    "interface_coupling_form",
    "moment_residual_form",
    "residual_form",
    "resultant_residual_form",
    "strong_constraints",
    "traction_residual_form",
]
