import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from airyspline.errors import ConfigurationError, DegenerateMappingError, DomainError
from airyspline.geometry import (
    EdgeRef,
    bar,
    beam,
    bilayer_bottom,
    bilayer_top,
    edge_frame,
    general_analytic,
    identity_mapping,
    inverse_hessians,
    inverse_jacobian,
    inverse_map,
    jacobian,
    make_mapping,
    map_point,
    parabolic,
    rectangle,
)

from oracles import numeric_inverse

PARAB = parabolic(5.0, 1.0)
AFFINE = [bar(2.0, 0.5), beam(3.0, 0.25), bilayer_bottom(500.0, 2.0), bilayer_top(500.0, 2.0, 3.0),
          rectangle(1.0, -2.0, 3.0, 0.5), identity_mapping()]
unit = st.floats(0.02, 0.98)


class TestMapPoint:
    def test_bar(self):
        assert map_point(bar(2.0, 0.5), 0, 0) == pytest.approx((0, 2))

    def test_beam(self):
        assert map_point(beam(3.0, 0.25), 0.5, 0.5) == pytest.approx((0, 0))

    def test_parabolic(self):
        assert map_point(PARAB, 1, 0) == pytest.approx((5, -0.25))

    @pytest.mark.parametrize(
        "mapping, corners",
        [
            (bar(2.0, 0.5), [(0, 2), (0.5, 2), (0, 0), (0.5, 0)]),
            (beam(3.0, 0.25), [(-3, 0.25), (3, 0.25), (-3, -0.25), (3, -0.25)]),
            (bilayer_bottom(500.0, 2.0), [(0, 0), (500, 0), (0, 2), (500, 2)]),
            (bilayer_top(500.0, 2.0, 3.0), [(0, 2), (500, 2), (0, 5), (500, 5)]),
            (parabolic(5.0, 1.0), [(0, -0.75), (5, -0.25), (0, 0.25), (5, 0.25)]),
        ],
    )
    def test_corners(self, mapping, corners):
        got = [map_point(mapping, xi, eta) for xi, eta in [(0, 0), (1, 0), (0, 1), (1, 1)]]
        np.testing.assert_allclose(got, corners, atol=1e-14)

    def test_parabolic_heights(self):
        for xi in np.linspace(0, 1, 7):
            top = map_point(PARAB, xi, 1)[1]
            bottom = map_point(PARAB, xi, 0)[1]
            x = 5.0 * xi
            assert top == pytest.approx(0.25)
            assert top - bottom == pytest.approx(1.0 - 0.5 * (2 * xi - xi**2))
            assert x == pytest.approx(map_point(PARAB, xi, 0)[0])

    def test_vectorised(self):
        x, y = map_point(beam(3.0, 0.25), np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(x, [-3, 3])
        np.testing.assert_allclose(y, [0.25, -0.25])

    def test_domain(self):
        with pytest.raises(DomainError):
            map_point(PARAB, 1.5, 0.2)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            make_mapping("annulus", r=1.0)

    def test_bad_parameters(self):
        with pytest.raises(ConfigurationError):
            make_mapping("bar", length=1.0)

    def test_general_analytic_degree_limit(self):
        with pytest.raises(ConfigurationError):
            general_analytic(np.zeros((5, 1)), [[0.0]])

    def test_make_mapping_matches_factory(self):
        a = make_mapping("parabolic", L=5.0, H0=1.0)
        assert map_point(a, 0.3, 0.4) == map_point(PARAB, 0.3, 0.4)


class TestJacobian:
    def test_bar(self):
        np.testing.assert_allclose(jacobian(bar(2.0, 0.5), 0.3, 0.8), [[0.5, 0], [0, -2]])

    def test_beam(self):
        np.testing.assert_allclose(jacobian(beam(3.0, 0.25), 0.1, 0.2), [[6, 0], [0, -0.5]])

    @given(xi=unit, eta=unit)
    @settings(max_examples=50, deadline=None)
    def test_parabolic_finite_differences(self, xi, eta):
        h = 1e-6
        J = jacobian(PARAB, xi, eta)
        fd = np.column_stack([
            (np.array(map_point(PARAB, xi + h, eta)) - map_point(PARAB, xi - h, eta)) / (2 * h),
            (np.array(map_point(PARAB, xi, eta + h)) - map_point(PARAB, xi, eta - h)) / (2 * h),
        ])
        np.testing.assert_allclose(J, fd, rtol=1e-7, atol=1e-7 * np.abs(J).max())

    def test_degenerate(self):
        squash = general_analytic([[0.0], [1.0]], [[0.0], [2.0]])  # y = 2x
        with pytest.raises(DegenerateMappingError):
            jacobian(squash, 0.5, 0.5)


class TestInverseJacobian:
    def test_bar(self):
        np.testing.assert_allclose(inverse_jacobian(bar(2.0, 0.5), 0.5, 0.5), [[2, 0], [0, -0.5]])

    def test_identity(self):
        np.testing.assert_allclose(inverse_jacobian(identity_mapping(), 0.2, 0.9), np.eye(2))

    @given(xi=st.floats(0, 1), eta=st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_parabolic_product(self, xi, eta):
        G = inverse_jacobian(PARAB, xi, eta)
        np.testing.assert_allclose(G @ jacobian(PARAB, xi, eta), np.eye(2), atol=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateMappingError):
            inverse_jacobian(general_analytic([[0.0], [1.0]], [[0.0], [1.0]]), 0.1, 0.1)


class TestInverseHessians:
    @pytest.mark.parametrize("mapping", AFFINE)
    def test_affine_zero(self, mapping):
        assert inverse_hessians(mapping, 0.37, 0.61) == (0.0,) * 6

    def test_parabolic_against_numeric_inverse(self):
        xi0, eta0 = 0.4, 0.6
        x0, y0 = map_point(PARAB, xi0, eta0)
        f = lambda x, y: numeric_inverse(lambda a, b: map_point(PARAB, a, b), x, y, (xi0, eta0))
        h = 1e-3
        vals = {}
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                vals[dx, dy] = np.array(f(x0 + dx * h, y0 + dy * h))
        dxx = (vals[1, 0] - 2 * vals[0, 0] + vals[-1, 0]) / h**2
        dyy = (vals[0, 1] - 2 * vals[0, 0] + vals[0, -1]) / h**2
        dxy = (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4 * h**2)
        ref = (dxx[0], dxy[0], dyy[0], dxx[1], dxy[1], dyy[1])
        got = inverse_hessians(PARAB, xi0, eta0)
        scale = max(abs(v) for v in ref)
        for g, r in zip(got, ref):
            assert abs(g - r) <= 1e-4 * scale

    @given(xi=unit, eta=unit, a=st.floats(-2, 2), b=st.floats(-2, 2))
    @settings(max_examples=25, deadline=None)
    def test_chain_rule_reconstruction(self, xi, eta, a, b):
        # F(x, y) = f(xi(x, y), eta(x, y)) with f = a xi^3 + b xi eta^2 + eta^3
        fxi = 3 * a * xi**2 + b * eta**2
        feta = 2 * b * xi * eta + 3 * eta**2
        fxx_, fxe, fee = 6 * a * xi, 2 * b * eta, 2 * b * xi + 6 * eta
        G = inverse_jacobian(PARAB, xi, eta)
        xxx, xxy, xyy, exx, exy, eyy = inverse_hessians(PARAB, xi, eta)
        Hp = np.array([[fxx_, fxe], [fxe, fee]])
        H = G.T @ Hp @ G + fxi * np.array([[xxx, xxy], [xxy, xyy]]) + feta * np.array([[exx, exy], [exy, eyy]])

        x0, y0 = map_point(PARAB, xi, eta)

        def F(x, y):
            u, v = numeric_inverse(lambda p, q: map_point(PARAB, p, q), x, y, (xi, eta))
            return a * u**3 + b * u * v**2 + v**3

        h = 1e-3
        Fxx = (F(x0 + h, y0) - 2 * F(x0, y0) + F(x0 - h, y0)) / h**2
        Fyy = (F(x0, y0 + h) - 2 * F(x0, y0) + F(x0, y0 - h)) / h**2
        Fxy = (F(x0 + h, y0 + h) - F(x0 + h, y0 - h) - F(x0 - h, y0 + h) + F(x0 - h, y0 - h)) / (4 * h**2)
        scale = max(1.0, np.abs(H).max())
        assert abs(H[0, 0] - Fxx) <= 1e-4 * scale
        assert abs(H[0, 1] - Fxy) <= 1e-4 * scale
        assert abs(H[1, 1] - Fyy) <= 1e-4 * scale


class TestInverseMap:
    @given(xi=st.floats(0, 1), eta=st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, xi, eta):
        x, y = map_point(PARAB, xi, eta)
        u, v = inverse_map(PARAB, x, y)
        assert u == pytest.approx(xi, abs=1e-10)
        assert v == pytest.approx(eta, abs=1e-10)

    def test_outside(self):
        with pytest.raises(DomainError):
            inverse_map(beam(3.0, 0.25), 0.0, 1.0)


class TestEdges:
    def test_bad_side(self):
        with pytest.raises(ConfigurationError):
            EdgeRef("p", "eta1")

    def test_reversed_parametrisation(self):
        e = EdgeRef("p", "xi=1", reversed=True)
        xi, eta = e.parametric(np.array([0.0, 0.25]))
        np.testing.assert_allclose(xi, 1.0)
        np.testing.assert_allclose(eta, [1.0, 0.75])

    @pytest.mark.parametrize(
        "side, normal",
        [("eta=0", (0, 1)), ("eta=1", (0, -1)), ("xi=0", (-1, 0)), ("xi=1", (1, 0))],
    )
    def test_beam_normals_point_outward(self, side, normal):
        # beam flips eta: eta = 0 is the top face y = +c
        _, n, ds = edge_frame(beam(3.0, 0.25), EdgeRef("b", side), np.array([0.3, 0.7]))
        np.testing.assert_allclose(n, [normal, normal], atol=1e-15)
        assert np.all(ds > 0)

    def test_parabolic_bottom_normal(self):
        s = np.array([0.25, 0.5])
        pts, n, ds = edge_frame(PARAB, EdgeRef("b", "eta=0"), s)
        # finite-difference tangent rotated, then pointing downwards out of the body
        h = 1e-6
        for k, sk in enumerate(s):
            t = (np.array(map_point(PARAB, sk + h, 0)) - map_point(PARAB, sk - h, 0)) / (2 * h)
            ref = np.array([t[1], -t[0]]) / np.linalg.norm(t)
            if ref[1] > 0:
                ref = -ref
            np.testing.assert_allclose(n[k], ref, atol=1e-8)
            assert ds[k] == pytest.approx(np.linalg.norm(t), rel=1e-8)
