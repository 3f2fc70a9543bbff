"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear even without ``-s``)
or directly as ``python tests/test_acceptance.py``.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from airyspline.cases import CASE_NAMES, build_case, error_table, line_error, profile
from airyspline.geometry import EdgeRef, identity_mapping, map_point
from airyspline.materials import IsotropicPlaneStress
from airyspline.physics import GlobalDofMap, Patch, edge_quadrature, internal_energy_form, stress_field, traction_operator
from airyspline.solver import solve
from airyspline.splines import ControlNet, surface_partials, surface_value

from oracles import double_sum, fd_divergence, midpoint_energy, numeric_inverse, second_differences

BEAM_TARGETS = {
    12: {"sigma_xx": 1.19e-3, "sigma_yy": 4.91e-5, "sigma_xy": 1.80e-4},
    24: {"sigma_xx": 2.99e-4, "sigma_yy": 1.20e-5, "sigma_xy": 4.43e-5},
    48: {"sigma_xx": 7.47e-5, "sigma_yy": 3.00e-6, "sigma_xy": 1.11e-5},
}


@pytest.fixture(scope="module")
def verdict(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def emit(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line)
        else:
            print(line)
        assert ok, line

    return emit


@pytest.fixture(scope="module")
def solved():
    out = {}
    for name in CASE_NAMES:
        case = build_case(name)
        out[name] = (case, solve(case.problem()))
    return out


def edge_resultant(case, sol, patch_name, side):
    patch = case.patch(patch_name)
    edge = EdgeRef(patch_name, side)
    s, w = edge_quadrature(patch, edge)
    A, a0, _, _, dgamma = traction_operator(patch, edge, s)
    t = A @ sol.patch_values(patch_name).ravel() + a0
    return (w * dgamma) @ t


def test_beam_error_table(verdict):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "airyspline", "solve", "--case", "beam-uniform-load"],
                          capture_output=True, text=True, timeout=120)
    elapsed = time.perf_counter() - start
    assert proc.returncode == 0, proc.stderr
    report = dict(line.split(" = ", 1) for line in proc.stdout.splitlines() if " = " in line)
    measured = {c: float(report[f"l2_error.{c}"]) for c in BEAM_TARGETS[12]}
    factors = {c: max(measured[c] / BEAM_TARGETS[12][c], BEAM_TARGETS[12][c] / measured[c]) for c in measured}
    ok = all(f <= 2.5 for f in factors.values()) and elapsed < 5.0 and report["dofs"] == "18"
    detail = ", ".join(f"{c} {measured[c]:.3e} (target {BEAM_TARGETS[12][c]:.2e}, x{factors[c]:.2f})" for c in measured)
    verdict(1, ok, f"{detail}; end-to-end CLI runtime {elapsed:.2f} s "
                   f"(the 2.99e-4 sometimes quoted for sigma_yy is the sigma_xx entry at l/c=24)")


def test_aspect_ratio_scaling(verdict):
    tables = {}
    for aspect in (12, 24, 48):
        case = build_case("beam-uniform-load", aspect=aspect)
        tables[aspect] = error_table(solve(case.problem()), case)
    ratios = {c: (tables[12][c] / tables[24][c], tables[24][c] / tables[48][c]) for c in tables[12]}
    ok = all(2.5 <= r <= 6.0 for pair in ratios.values() for r in pair)
    detail = ", ".join(f"{c} {tables[12][c]:.3e}->{tables[24][c]:.3e}->{tables[48][c]:.3e} "
                       f"(x{r[0]:.2f}, x{r[1]:.2f}; target {BEAM_TARGETS[24][c]:.2e}, {BEAM_TARGETS[48][c]:.2e})"
                       for c, r in ratios.items())
    verdict(2, ok, detail)


def test_bar_profile(verdict, solved):
    case, sol = solved["bar-self-weight"]
    c, l = case.parameters["c"], case.parameters["l"]
    # y grows away from the clamp at y = 0, so the excluded clamp band is [0, c]
    err, norms = line_error(sol, case, "bar", 0.25, (c, l), "sigma_yy")
    rel = norms / norms[1]
    lit_err, lit_norms = line_error(sol, case, "bar", 0.25, (0.0, l - c), "sigma_yy")
    ok = err <= 0.05 and rel[0] <= 0.05 and rel[2] <= 0.05
    verdict(3, ok, f"y in [{c}, {l}]: sigma_yy error {err:.2e}, |sigma_xx|/|sigma_yy| {rel[0]:.2e}, "
                   f"|sigma_xy|/|sigma_yy| {rel[2]:.2e} (band [0, {l - c}] next to the clamp: "
                   f"error {lit_err:.2e}, sigma_xx ratio {lit_norms[0] / lit_norms[1]:.2e})")


def test_equilibrium_identity(verdict, solved):
    rng = np.random.default_rng(2024)
    worst = {}
    for name, (case, sol) in solved.items():
        u = np.linspace(0.0, 1.0, 101)
        U, V = (a.ravel() for a in np.meshgrid(u, u, indexing="ij"))
        smax = max(np.abs(sol.stresses(p.name, U, V)).max() for p in case.patches)
        resid = 0.0
        for patch in case.patches:
            fn = lambda a, b, m=patch.mapping: map_point(m, a, b)
            corners = np.array([fn(a, b) for a in (0.0, 1.0) for b in (0.0, 1.0)])
            h = 1e-4 * np.ptp(corners, axis=0).max()
            for xi, eta in 0.05 + 0.9 * rng.random((100 // len(case.patches), 2)):
                x0, y0 = fn(xi, eta)

                def sigma(x, y, p=patch, guess=(xi, eta)):
                    a, b = numeric_inverse(fn, x, y, guess)
                    return sol.stresses(p.name, a, b)[0]

                rx, ry = fd_divergence(sigma, x0, y0, h)
                fx, fy = patch.potential.force(x0, y0)
                resid = max(resid, abs(rx + fx), abs(ry + fy))
        worst[name] = resid / smax
    ok = all(v <= 1e-4 for v in worst.values())
    verdict(4, ok, ", ".join(f"{n} {v:.2e}" for n, v in worst.items()) + " (relative to max |sigma|)")


def test_bilayer(verdict, solved):
    case, sol = solved["bilayer-cantilever"]
    w, L = case.parameters["w"], case.parameters["L"]
    interface = sol.bc_residuals["interface"]
    clamp = sum(edge_resultant(case, sol, name, "xi=0") for name in ("bottom", "top"))
    xi_mid = np.array([0.5])
    below = sol.stresses("bottom", xi_mid, np.array([1.0]))[0]
    above = sol.stresses("top", xi_mid, np.array([0.0]))[0]
    jump = abs(below[0] - above[0])
    syy_scale = max(abs(below[1]), abs(above[1]))
    ok = (interface <= 1e-4 * w**2 * L
          and abs(clamp[1] - w * L) <= 0.01 * w * L
          and below[0] * above[0] < 0
          and jump > 10 * syy_scale)
    verdict(5, ok, f"interface residual {interface:.2e} (limit {1e-4 * w**2 * L:.2e}), clamp resultant "
                   f"({clamp[0]:.3e}, {clamp[1]:.6g}) vs w*L {w * L:g}, sigma_xx at x=250: bottom {below[0]:.4g} "
                   f"top {above[0]:.4g}, jump {jump:.4g} vs 10*sigma_yy {10 * syy_scale:.4g}")


def test_parabolic(verdict, solved):
    case, sol = solved["parabolic-cantilever"]
    Q, P, H0 = case.parameters["Q"], case.parameters["P"], case.parameters["H0"]
    res = edge_resultant(case, sol, "beam", "xi=1")
    scale = abs(P) / H0
    rms = {}
    for side, key in (("eta=1", "top"), ("eta=0", "bottom")):
        patch = case.patch("beam")
        s, wts = edge_quadrature(patch, EdgeRef("beam", side))
        length = float(wts @ traction_operator(patch, EdgeRef("beam", side), s)[4])
        rms[key] = np.sqrt(sol.bc_residuals[key] / length)
    rows = profile(sol, case, case.stations[0], 41)
    syy = np.array([r[6] for r in rows])
    # values within round-off of zero do not count as a change of sign
    floor = 1e-6 * np.abs(syy).max()
    sign_change = bool(syy.min() < -floor and syy.max() > floor)
    ok = (abs(res[0] - Q) <= 0.01 * abs(Q) and abs(res[1] - P) <= 0.01 * abs(P)
          and all(v <= 1e-4 * scale for v in rms.values()) and sign_change)
    verdict(6, ok, f"right-edge resultant ({res[0]:.6g}, {res[1]:.6g}) vs ({Q:g}, {P:g}); rms traction "
                   f"top {rms['top']:.2e} bottom {rms['bottom']:.2e} (limit {1e-4 * scale:.1e}); sigma_yy at "
                   f"x=2.5 spans [{syy.min():.4g}, {syy.max():.4g}], sign change {sign_change}")


def test_dof_counts(verdict, solved):
    counts = {n: solved[n][1].values.size for n in CASE_NAMES}
    free = solved["beam-uniform-load"][1].free.size
    expected = dict(zip(CASE_NAMES, (50, 18, 168, 50)))
    ok = counts == expected and free == 2
    verdict(7, ok, ", ".join(f"{n} {v}" for n, v in counts.items()) + f"; beam free set {free}")


def test_oracle_equivalence(verdict):
    rng = np.random.default_rng(8)
    patch = Patch("p", identity_mapping(), ControlNet.uniform((2, 2), (3, 3)), IsotropicPlaneStress(1.0, 0.0))
    form = internal_energy_form([patch], GlobalDofMap([patch]))
    W = np.diag([1.0, 1.0, 2.0])
    energy_rel = []
    for _ in range(3):
        c = rng.normal(size=9)
        ref = midpoint_energy(lambda u, v: stress_field(patch, c, u, v), W, 200)
        energy_rel.append(abs(form.value(c) - ref) / abs(ref))

    net = ControlNet.uniform((3, 3), (6, 5), rng.normal(size=(6, 5)))
    f = lambda a, b: surface_value(net, a, b)
    sum_err, fd_err = 0.0, 0.0
    for xi, eta in 0.1 + 0.8 * rng.random((20, 2)):
        ref = double_sum(net.knots_xi.values, 3, net.knots_eta.values, 3, net.values, xi, eta)
        sum_err = max(sum_err, abs(f(xi, eta) - ref))
        part = surface_partials(net, xi, eta)
        fd = second_differences(f, xi, eta, 1e-4)
        fd_err = max(fd_err, max(abs(part[3] - fd[0]), abs(part[4] - fd[1]), abs(part[5] - fd[2]))
                     / max(1.0, *map(abs, part[3:])))
    ok = max(energy_rel) <= 1e-10 and sum_err <= 1e-12 and fd_err <= 1e-5
    verdict(8, ok, f"energy vs 200x200 midpoint rel diff max {max(energy_rel):.2e} (limit 1e-10); "
                   f"surface vs double sum {sum_err:.1e}; second derivatives vs differences {fd_err:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
