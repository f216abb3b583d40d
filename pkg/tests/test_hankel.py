import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from voronoi_twist import hankel as H
from voronoi_twist.bessel import BesselParamsComplex, BesselParamsReal, evaluate_real

DELTA = BesselParamsReal.delta_form()


def _f(T=10.0, rho=0.0, **kw):
    return H.TestFunction(H.WeightSpec(T, **kw), rho)


def test_bump_profile():
    u = np.array([-0.1, 0.0, 1 / 3, 0.5, 2 / 3, 1.0, 1.1])
    v = H.bump(u)
    assert v[0] == v[1] == v[-2] == v[-1] == 0
    assert v[2] == pytest.approx(1) and v[3] == 1 and v[4] == pytest.approx(1)
    assert np.all(np.diff(H.bump(np.linspace(0, 1 / 3, 50))) >= 0)


def test_weight_sides():
    x = np.array([-15.0, 15.0])
    assert H.WeightSpec(10, sides="positive")(x).tolist() == [0.0, 1.0]
    assert H.WeightSpec(10, sides="negative")(x).tolist() == [1.0, 0.0]
    assert H.WeightSpec(10, sides="both")(x).tolist() == [1.0, 1.0]


def test_zero_weight():
    f = _f(amplitude=0.0)
    assert np.all(H.hankel_real(DELTA, f, [0.5, -2.0]).value == 0)
    g = H.TestFunction(H.WeightSpec(1.0, place="complex", amplitude=0.0))
    assert np.all(H.hankel_complex(None, g, [0.3 + 0.1j]) == 0)


def test_direct_matches_mellin():
    f = _f(T=10.0, rho=0.3)
    y = np.array([0.05, 0.4, 1.7, -0.8])
    a = H.hankel_real(DELTA, f, y, method="direct").value
    b = H.hankel_real(DELTA, f, y, method="mellin", tol=1e-10, estimate_error=False).value
    assert a == pytest.approx(b, abs=1e-8)


def test_rank_one_transform_is_fourier_transform():
    p = BesselParamsReal.additive_character()
    f = _f(T=2.0, sides="both")
    y = np.array([0.3, -1.1])
    x = np.linspace(-4.5, 4.5, 20001)
    ref = [trapezoid(f(x) * np.exp(2j * math.pi * x * yy), x) for yy in y]
    v = H.hankel_real(p, f, y, method="mellin", estimate_error=False).value
    assert v == pytest.approx(ref, abs=1e-7)


def test_refinement_stable():
    f = _f(T=20.0, rho=0.05)
    y = np.array([0.02, 0.3, 2.0])
    coarse = H.hankel_direct(DELTA, f, y)
    fine = H.hankel_direct(DELTA, f, y, c=2 * H.NODES_PER_TURN, base=2 * H.BASE_NODES)
    assert coarse == pytest.approx(fine, abs=1e-9)


def test_linearity():
    fa, fb = _f(T=10.0, rho=0.1), _f(T=12.0, width=1.5)
    y = np.array([0.1, 0.9])
    va = H.hankel_real(DELTA, fa, y).value
    vb = H.hankel_real(DELTA, fb, y).value

    class Combo:
        weight = fa.weight
        rho = 0.0
        is_zero = False

        def __call__(self, x):
            return 2 * fa(x) - 3j * fb(x)

    x = np.linspace(9.5, 20.5, 40001)
    for k, yy in enumerate(y):
        kern = evaluate_real(DELTA, x * yy).value
        ref = trapezoid(kern * Combo()(x), x)
        assert ref == pytest.approx(2 * va[k] - 3j * vb[k], abs=1e-6)


def test_interpolated_hankel_matches_exact():
    f = _f(T=20.0)
    mh = H.MellinHankel(BesselParamsReal.sym2_delta(), f, tol=1e-11, y_range=(1e-3, 10.0))
    ih = H.InterpolatedHankel(mh, 3, 10.0, 1e-3 ** (1 / 3))
    y = np.array([-7.3, -0.02, 0.004, 0.9, 9.5])
    assert ih(y) == pytest.approx(mh(y), abs=1e-10)
    assert ih.sample_error() < 1e-9


def test_complex_rotation_invariance():
    f = H.TestFunction(H.WeightSpec(1.0, place="complex"))
    p = BesselParamsComplex((0.2j, -0.2j), (0, 0))
    u = 0.7 * np.exp(1j * np.array([0.0, 0.9, 2.5]))
    v = np.abs(H.hankel_complex(p, f, u))
    assert v == pytest.approx(np.full(3, v[0]), rel=1e-8)


def test_complex_rank_one_matches_plane_quadrature():
    f = H.TestFunction(H.WeightSpec(1.0, place="complex"))
    u = 0.3 + 0.2j
    xs = np.linspace(-2.2, 2.2, 1201)
    X, Y = np.meshgrid(xs, xs)
    Z = X + 1j * Y
    dx = xs[1] - xs[0]
    # measure at a complex place is twice Lebesgue measure
    ref = 2 * np.sum(f(Z) * np.exp(2j * math.pi * 2 * (Z * u).real)) * dx * dx
    assert H.hankel_complex(None, f, [u])[0] == pytest.approx(ref, abs=1e-7)


def test_small_y_bound():
    T = 10.0
    f = _f(T=T)
    y = np.geomspace(1e-4, 0.1, 12) / T
    v = np.abs(H.hankel_real(DELTA, f, y).value)
    assert np.all(v <= 3 * T * np.sqrt(T / y))


def test_decay_scan_far_tail():
    f = _f(T=20.0)
    y = np.geomspace(1e3, 1e5, 25) / 20.0
    rep = H.decay_scan(DELTA, f, y, tail_range=(1e3, 1e5))
    # fitted exponents are decay rates: |f~(y)| ~ |y|^(-rate)
    assert rep.exponents["far_tail"] >= 2


def test_decay_scan_window_scaling():
    sups = []
    for T in (20.0, 40.0, 80.0):
        f = _f(T=T, rho=50.0 / T)
        y = np.geomspace(1, 1e5, 160) / T
        sups.append(H.decay_scan(DELTA, f, y).window_sup)
    assert max(sups) / min(sups) < 2
