"""Hot numeric kernels with a numba path and a pure-numpy path.

Two kernels dominate assembly time:

* ``collocation`` evaluates every univariate B-spline basis function and its
  derivatives at a batch of parametric points (Cox-de Boor triangle, all
  non-zero functions of a span at once);
* ``accumulate_quadratic`` reduces per-quadrature-point stress operators into
  the Hessian, gradient and constant of a quadratic energy.

``*_numba`` variants are loop kernels compiled with :func:`numba.njit`;
``*_numpy`` variants are vectorised over points. The module-level names
``collocation`` and ``accumulate_quadratic`` dispatch according to
:data:`airyspline._accel.USE_NUMBA`. Both paths visit points in the same order,
so results agree to rounding.
"""
import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit


# ---------------------------------------------------------------------------
# loop kernels (compiled when numba is importable)


@njit(cache=True)
def _find_span_loop(knots, degree, n, u):
    # u == knots[n] (right end) belongs to the last non-degenerate span
    if u >= knots[n]:
        return n - 1
    if u <= knots[degree]:
        return degree
    lo = degree
    hi = n
    mid = (lo + hi) // 2
    while u < knots[mid] or u >= knots[mid + 1]:
        if u < knots[mid]:
            hi = mid
        else:
            lo = mid
        mid = (lo + hi) // 2
    return mid


@njit(cache=True)
def _ders_basis_loop(knots, degree, span, u, nders, ders):
    p = degree
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    a = np.zeros((2, p + 1))
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = u - knots[span + 1 - j]
        right[j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved
    for k in range(nders + 1):
        for j in range(p + 1):
            ders[k, j] = 0.0
    for j in range(p + 1):
        ders[0, j] = ndu[j, p]
    top = min(nders, p)
    for r in range(p + 1):
        s1 = 0
        s2 = 1
        a[0, 0] = 1.0
        for k in range(1, top + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, top + 1):
        for j in range(p + 1):
            ders[k, j] *= fac
        fac *= p - k


@njit(cache=True)
def collocation_numba(knots, degree, points, nders):
    n = knots.shape[0] - degree - 1
    npts = points.shape[0]
    out = np.zeros((nders + 1, npts, n))
    ders = np.zeros((nders + 1, degree + 1))
    for q in range(npts):
        span = _find_span_loop(knots, degree, n, points[q])
        _ders_basis_loop(knots, degree, span, points[q], nders, ders)
        for k in range(nders + 1):
            for j in range(degree + 1):
                out[k, q, span - degree + j] = ders[k, j]
    return out


@njit(cache=True)
def accumulate_quadratic_numba(B, W, s0, wts):
    nq, ncomp, ndof = B.shape
    H = np.zeros((ndof, ndof))
    g = np.zeros(ndof)
    c = 0.0
    WB = np.zeros((ncomp, ndof))
    Ws = np.zeros(ncomp)
    for q in range(nq):
        w = wts[q]
        for a in range(ncomp):
            Ws[a] = 0.0
            for b in range(ncomp):
                Ws[a] += W[q, a, b] * s0[q, b]
            for j in range(ndof):
                acc = 0.0
                for b in range(ncomp):
                    acc += W[q, a, b] * B[q, b, j]
                WB[a, j] = acc
        for i in range(ndof):
            for a in range(ncomp):
                bai = w * B[q, a, i]
                if bai != 0.0:
                    for j in range(ndof):
                        H[i, j] += bai * WB[a, j]
                    g[i] += bai * Ws[a]
        for a in range(ncomp):
            c += 0.5 * w * s0[q, a] * Ws[a]
    return H, g, c


# ---------------------------------------------------------------------------
# vectorised numpy kernels


def find_span_numpy(knots, degree, points):
    n = knots.shape[0] - degree - 1
    spans = np.searchsorted(knots, points, side="right") - 1
    return np.clip(spans, degree, n - 1)


def collocation_numpy(knots, degree, points, nders):
    knots = np.asarray(knots, dtype=float)
    u = np.asarray(points, dtype=float)
    p = degree
    n = knots.shape[0] - p - 1
    npts = u.shape[0]
    spans = find_span_numpy(knots, p, u)

    ndu = np.zeros((npts, p + 1, p + 1))
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    ndu[:, 0, 0] = 1.0
    for j in range(1, p + 1):
        left[:, j] = u - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - u
        saved = np.zeros(npts)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    ders = np.zeros((nders + 1, npts, p + 1))
    ders[0] = ndu[:, :, p]
    top = min(nders, p)
    a = np.zeros((2, npts, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, :, 0] = 1.0
        for k in range(1, top + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, :, 0] = a[s1, :, 0] / ndu[:, pk + 1, rk]
                d = a[s2, :, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, :, j] = (a[s1, :, j] - a[s1, :, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[s2, :, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[s2, :, k] = -a[s1, :, k - 1] / ndu[:, pk + 1, r]
                d = d + a[s2, :, k] * ndu[:, r, pk]
            ders[k, :, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, top + 1):
        ders[k] *= fac
        fac *= p - k

    out = np.zeros((nders + 1, npts, n))
    rows = np.arange(npts)[:, None]
    cols = spans[:, None] - p + np.arange(p + 1)[None, :]
    for k in range(nders + 1):
        out[k, rows, cols] = ders[k]
    return out


def accumulate_quadratic_numpy(B, W, s0, wts):
    WB = np.einsum("qab,qbj->qaj", W, B)
    Ws = np.einsum("qab,qb->qa", W, s0)
    Bw = B * wts[:, None, None]
    H = np.einsum("qai,qaj->ij", Bw, WB)
    g = np.einsum("qai,qa->i", Bw, Ws)
    c = 0.5 * float(np.einsum("q,qa,qa->", wts, s0, Ws))
    return H, g, c


# ---------------------------------------------------------------------------
# dispatch


def collocation(knots, degree, points, nders):
    """Basis values and derivatives at ``points``.

    Returns an array of shape ``(nders + 1, len(points), n)`` whose ``[k, q, i]``
    entry is the ``k``-th derivative of basis function ``i`` at point ``q``.
    """
    knots = np.ascontiguousarray(knots, dtype=float)
    points = np.ascontiguousarray(np.atleast_1d(points), dtype=float)
    if USE_NUMBA:
        return collocation_numba(knots, int(degree), points, int(nders))
    return collocation_numpy(knots, int(degree), points, int(nders))


def accumulate_quadratic(B, W, s0, wts):
    """Return ``(H, g, c)`` of ``sum_q wts[q] * 0.5 (B_q x + s_q)^T W_q (B_q x + s_q)``."""
    B = np.ascontiguousarray(B, dtype=float)
    W = np.ascontiguousarray(W, dtype=float)
    s0 = np.ascontiguousarray(s0, dtype=float)
    wts = np.ascontiguousarray(wts, dtype=float)
    if USE_NUMBA:
        return accumulate_quadratic_numba(B, W, s0, wts)
    return accumulate_quadratic_numpy(B, W, s0, wts)


__all__ = [
    "HAVE_NUMBA",
    "USE_NUMBA",
    "accumulate_quadratic",
    "accumulate_quadratic_numba",
    "accumulate_quadratic_numpy",
    "collocation",
    "collocation_numba",
    "collocation_numpy",
]
