"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
``acceptance criteria`` section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.special import jv

from voronoi_twist import bessel as B, coeffs, hankel as H, kloosterman as K, numberfield as nf
from voronoi_twist import twistsums as ts, voronoi as V

pytestmark = pytest.mark.slow

GL2_PAIRS = [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5)]


def test_criterion_01_voronoi_gl2(acceptance):
    worst, slowest, failures = 0.0, 0.0, []
    for alpha, beta in GL2_PAIRS:
        for T in (20.0, 50.0):
            for rho in (0.0, 1 / T):
                t0 = time.perf_counter()
                rep = V.verify_identity(V.VoronoiInstance.rational(2, alpha, beta, T, rho, tol=1e-4))
                slowest = max(slowest, time.perf_counter() - t0)
                worst = max(worst, rep.rel_residual)
                if not rep.rel_residual < 1e-4:
                    failures.append((alpha, beta, T, rho, rep.rel_residual))
    ok = not failures and slowest < 300
    acceptance(1, ok, f"20 instances, worst relative residual {worst:.2e} (< 1e-4), "
                      f"slowest {slowest:.1f}s (< 300s)")
    assert ok, failures


def test_criterion_02_voronoi_gl3(acceptance):
    rows = []
    for alpha, beta in ((0, 1), (1, 2)):
        t0 = time.perf_counter()
        rep = V.verify_identity(V.VoronoiInstance.rational(3, alpha, beta, 20.0, tol=1e-2))
        rows.append((alpha, beta, rep.rel_residual, time.perf_counter() - t0))
    ok = all(r < 1e-2 and s < 1800 for _, _, r, s in rows)
    acceptance(2, ok, "; ".join(f"{a}/{b}: rel {r:.2e} in {s:.0f}s" for a, b, r, s in rows)
               + " (< 1e-2, < 1800s)")
    assert ok


def test_criterion_03_wilton_exponent(acceptance):
    grid = ts.default_theta_grid(16, 48)
    T_grid = [2.0 ** k for k in range(8, 15)]
    rep = ts.exponent_scan(coeffs.make_provider("delta"), grid, T_grid)
    ctrl = ts.exponent_scan(coeffs.make_provider("constant"), [0.0], T_grid)
    ok = len(grid) == 64 and 0.35 <= rep.slope <= 0.62 and ctrl.slope > 0.9
    acceptance(3, ok, f"slope {rep.slope:.3f} (CI {rep.ci[0]:.3f}..{rep.ci[1]:.3f}) in [0.35, 0.62]; "
                      f"constant-coefficient control {ctrl.slope:.3f} > 0.9")
    assert ok


def test_criterion_04_miller_exponent(acceptance):
    T_grid = [2.0 ** k for k in range(8, 13)]
    rep = ts.exponent_scan(coeffs.make_provider("sym2delta"), ts.default_theta_grid(16, 48), T_grid)
    ok = rep.slope <= 0.85
    acceptance(4, ok, f"GL3 slope {rep.slope:.3f} (CI {rep.ci[0]:.3f}..{rep.ci[1]:.3f}) <= 0.85")
    assert ok


def test_criterion_05_hecke_relation(acceptance):
    bad = coeffs.hecke_violations(200)
    ok = not bad and coeffs.tau(2) == -24 and coeffs.tau(6) == -6048
    acceptance(5, ok, f"{len(bad)} violations for m, n <= 200; tau(2) = {coeffs.tau(2)}, "
                      f"tau(6) = {coeffs.tau(6)}")
    assert ok


def test_criterion_06_weil_bound(acceptance):
    rep = K.weil_check(500)
    s113 = K.kloosterman_rational(1, 1, 3)
    ok = rep.violations == 0 and abs(s113 + 1) < 1e-10
    acceptance(6, ok, f"c <= 500: {rep.violations} violations, max ratio {rep.max_ratio:.4f}; "
                      f"S(1,1;3) = {s113:.12f}")
    assert ok


def test_criterion_07_bessel_kernel(acceptance):
    # classical profile, via the two routes that do not use the closed form
    x = np.linspace(2, 10, 50)
    classical = jv(11, 4 * math.pi * np.sqrt(x))
    p2 = B.BesselParamsReal.delta_form()
    spreads = {}
    for method in ("contour", "meijerg"):
        ratio = B.evaluate_real(p2, x, method=method).value / classical
        spreads[method] = float(np.std(ratio) / abs(np.mean(ratio)))
    # contour independence on random instances
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        r = int(rng.integers(1, 4))
        t = rng.uniform(-3, 3, size=r - 1)
        mu = tuple(1j * t) + (-1j * t.sum(),) if r > 1 else (0.0,)
        p = B.BesselParamsReal(mu, tuple(int(d) for d in rng.integers(0, 2, size=r)))
        xs = rng.uniform(0.3, 5, size=3) * rng.choice([-1, 1], size=3)
        c1 = B.Contour.for_poles(p.rightmost_pole(), p.max_imag(), sigma1=-1.0)
        c2 = B.Contour.for_poles(p.rightmost_pole(), p.max_imag(), sigma1=-1.5, angle=0.65 * math.pi)
        a = B.evaluate_real(p, xs, method="contour", contour=c1).value
        b = B.evaluate_real(p, xs, method="contour", contour=c2).value
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(1, np.abs(a)))))
    # oscillation frequencies
    f2 = B.asymptotic_check_real(p2, np.linspace(5, 50, 800)).frequency
    p3 = B.BesselParamsReal((0.2j, 0.0, -0.2j), (0, 0, 0))
    f3 = B.asymptotic_check_real(p3, np.linspace(3, 7, 250)).frequency
    ok = (max(spreads.values()) < 1e-6 and worst < 1e-8 and abs(f2 - 2) <= 0.01 and abs(f3 - 3) <= 0.01)
    acceptance(7, ok, f"ratio spread contour {spreads['contour']:.1e}, meijerg {spreads['meijerg']:.1e} "
                      f"(< 1e-6); contour independence {worst:.1e} (< 1e-8); "
                      f"frequencies r=2 {f2:.4f}, r=3 {f3:.4f} (+-0.01)")
    assert ok


def test_criterion_08_hankel_decay(acceptance):
    params = B.BesselParamsReal.delta_form()
    sups = []
    for T in (20.0, 40.0, 80.0):
        f = H.TestFunction(H.WeightSpec(T), 50.0 / T)           # T rho = 50 held fixed
        rep = H.decay_scan(params, f, np.geomspace(1, 1e5, 200) / T)
        sups.append(rep.window_sup)
    f0 = H.TestFunction(H.WeightSpec(20.0), 0.0)
    tail = H.decay_scan(params, f0, np.geomspace(1e3, 1e5, 40) / 20.0, tail_range=(1e3, 1e5))
    rate = tail.exponents["far_tail"]
    stable = max(sups) / min(sups)
    ok = all(s is not None for s in sups) and stable <= 2 and rate >= 2
    acceptance(8, ok, f"window sup {', '.join(f'{s:.4f}' for s in sups)} at T = 20, 40, 80 "
                      f"(spread {stable:.3f} <= 2); far-tail decay exponent {rate:.2f} >= 2")
    assert ok


def test_criterion_09_dirichlet(acceptance):
    rng = np.random.default_rng(2024)
    bad, total, consts = 0, 0, {}
    for name in ("Q", "Qi", "Qsqrt2"):
        F = nf.load_field(name)
        consts[name] = nf.dirichlet_constant(F)
        for Q in (10, 50):
            for _ in range(1000):
                if F.r2:
                    theta = [complex(*rng.uniform(-1, 1, 2))]
                else:
                    theta = list(rng.uniform(-1, 1, F.n_places))
                bad += not nf.dirichlet_approx(F, theta, Q).satisfies_bounds()
                total += 1
    ok = bad == 0
    acceptance(9, ok, f"{bad} violations in {total} samples; C_F = "
                      + ", ".join(f"{k} {v:.4f}" for k, v in consts.items()))
    assert ok


def test_criterion_10_smoothing_kernel(acceptance):
    dual_bad = sum(ts.dual_violations(ts.SmoothingKernel(X)) for X in (4, 16, 64))
    grid = [4, 8, 16, 32, 64, 128, 256]
    growth = ts.l1_growth(grid)
    growth2 = ts.l1_growth(grid, nf.load_field("Qsqrt2"))
    ok = dual_bad == 0 and growth.spread <= 3
    acceptance(10, ok, f"dual property: {dual_bad} violations (X = 4, 16, 64); L1/(log X)^N spread "
                       f"{growth.spread:.2f} over X = 4..256 (<= 3, N = 1); degree 2 spread "
                       f"{growth2.spread:.2f} (reported)")
    assert ok


def test_criterion_11_parseval(acceptance):
    mean_sq, mass = ts.parseval_check(coeffs.make_provider("delta"), 2 ** 10)
    gap = abs(mean_sq - mass) / mass
    ok = gap < 0.02
    acceptance(11, ok, f"theta-mean |S|^2 = {mean_sq:.6f}, coefficient mass {mass:.6f}, gap {gap:.1e} (< 2%)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
