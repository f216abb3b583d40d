import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import jv

from voronoi_twist import bessel as B


def test_gamma_factor_real_values():
    assert B.gamma_factor_real(0.5, 0) == pytest.approx(1.0, abs=1e-12)
    assert B.gamma_factor_real(0.5, 1) == pytest.approx(1j, abs=1e-12)
    assert abs(B.gamma_factor_real(1.0, 0)) < 1e-12


@pytest.mark.parametrize("s", [0.3 + 1j, -0.7 + 2.5j, 1.4 - 0.2j, 0.25])
@pytest.mark.parametrize("delta", [0, 1])
def test_gamma_factor_real_quotient_form(s, delta):
    # i^delta pi^(1/2 - s) Gamma((s + delta)/2) / Gamma((1 - s + delta)/2)
    ref = (1j ** delta * mp.pi ** (0.5 - mp.mpc(s)) * mp.gamma((mp.mpc(s) + delta) / 2)
           / mp.gamma((1 - mp.mpc(s) + delta) / 2))
    assert B.gamma_factor_real(s, delta) == pytest.approx(complex(ref), rel=1e-10)
    assert B.gamma_factor_real_closed(s, delta) == pytest.approx(complex(ref), rel=1e-10)


def test_gamma_factor_complex_values():
    assert B.gamma_factor_complex(0.5, 0) == pytest.approx(1.0, abs=1e-12)
    assert B.gamma_factor_complex(0.5, 2) == pytest.approx(-1.0, abs=1e-12)
    s = mp.mpc(0.3, 2)
    ref = 1j * (2 * mp.pi) ** (1 - 2 * s) * mp.gamma(s + mp.mpf(1) / 2) / mp.gamma(1 - s + mp.mpf(1) / 2)
    assert B.gamma_factor_complex(0.3 + 2j, 1) == pytest.approx(complex(ref), rel=1e-10)


def test_pole_error():
    with pytest.raises(B.PoleError):
        B.gamma_factor_real(0.0, 0)


def test_params_validation():
    with pytest.raises(ValueError):
        B.BesselParamsReal((0.1, 0.1), (0, 0))
    with pytest.raises(ValueError):
        B.BesselParamsReal((0.0,), (0, 1))
    with pytest.raises(ValueError):
        B.BesselParamsComplex((0.6, -0.6), (0, 0))


def test_delta_kernel_is_classical_bessel():
    p = B.BesselParamsReal.delta_form()
    x = np.linspace(2, 10, 50)
    classical = jv(11, 4 * math.pi * np.sqrt(x))
    for method in ("contour", "meijerg"):
        ratio = B.evaluate_real(p, x, method=method).value / classical
        assert np.std(ratio) / abs(np.mean(ratio)) < 1e-6
        assert np.mean(ratio) == pytest.approx(2 * math.pi, rel=1e-9)


def test_delta_kernel_vanishes_on_negative_axis():
    p = B.BesselParamsReal.delta_form()
    v = B.evaluate_real(p, np.array([-0.5, -3.0]), method="contour").value
    assert np.all(np.abs(v) < 1e-9)


def test_rank_one_kernel_is_additive_character():
    p = B.BesselParamsReal.additive_character()
    x = np.array([-1.3, -0.2, 0.4, 2.5])
    v = B.evaluate_real(p, x, method="contour").value
    assert v == pytest.approx(np.exp(2j * math.pi * x), abs=1e-9)


def test_contour_independence():
    p = B.BesselParamsReal((0.4j, 0.1j, -0.5j), (0, 1, 1))
    x = np.array([-2.0, -0.3, 0.7, 3.1])
    c1 = B.Contour.for_poles(p.rightmost_pole(), p.max_imag(), sigma1=-1.0)
    c2 = B.Contour.for_poles(p.rightmost_pole(), p.max_imag(), sigma1=-1.5)
    v1 = B.evaluate_real(p, x, method="contour", contour=c1).value
    v2 = B.evaluate_real(p, x, method="contour", contour=c2).value
    assert v1 == pytest.approx(v2, abs=1e-8)


def test_contour_matches_meijerg():
    p = B.BesselParamsReal.sym2_delta()
    x = np.array([-1.5, 0.5, 2.0])
    a = B.evaluate_real(p, x, method="contour").value
    b = B.evaluate_real(p, x, method="meijerg").value
    assert a == pytest.approx(b, rel=1e-8, abs=1e-10)


def test_near_zero_bound_real():
    p = B.BesselParamsReal.delta_form()
    x = np.geomspace(1e-3, 1, 25)
    scaled = np.sqrt(x) * np.abs(B.evaluate_real(p, x).value)
    assert np.max(scaled) < 5


def test_tolerance_error():
    p = B.BesselParamsReal((0.2j, -0.2j), (0, 0))
    tight = B.Contour(length=2.0)
    with pytest.raises(B.ToleranceError):
        B.bessel_kernel_real(p, np.array([1.0]), tol=1e-14, method="contour", contour=tight)


def test_complex_kernel_conjugation_symmetry():
    p = B.BesselParamsComplex((0.3j, -0.3j), (0, 0))
    z = np.array([0.5 + 0.7j, 1.2 - 0.4j])
    a = B.evaluate_complex(p, z).value
    b = B.evaluate_complex(p, np.conj(z)).value
    assert a == pytest.approx(np.conj(b), abs=1e-10)


def test_complex_kernel_truncation_stable():
    z = np.array([2.0 * np.exp(0.3j), 1.0j, -1.9 + 0.2j])
    v30 = B.evaluate_complex(B.BesselParamsComplex((0.3j, -0.3j), (0, 0), M_max=30), z).value
    v35 = B.evaluate_complex(B.BesselParamsComplex((0.3j, -0.3j), (0, 0), M_max=35), z).value
    assert v30 == pytest.approx(v35, abs=1e-8)


def test_complex_kernel_near_zero_bound():
    p = B.BesselParamsComplex((0.3j, -0.3j), (0, 0))
    z = np.array([0.05, 0.2, 0.5, 1.0]) * np.exp(0.4j)
    assert np.max(np.abs(z) * np.abs(B.evaluate_complex(p, z).value)) < 5


def test_rank_one_complex_kernel():
    # J(z) = e(Tr z) = e(2 Re z) at a complex place
    p = B.BesselParamsComplex((0,), (0,))
    z = np.array([0.3 + 0.2j, -0.4 + 0.1j])
    v = B.evaluate_complex(p, z).value
    assert v == pytest.approx(np.exp(2j * math.pi * 2 * z.real), abs=1e-8)


def test_asymptotic_frequency_rank_two():
    rep = B.asymptotic_check_real(B.BesselParamsReal.delta_form(), np.linspace(5, 50, 800))
    assert rep.frequency_ok
    assert rep.envelope[1] < 10


def test_negative_argument_decay_rank_two():
    p = B.BesselParamsReal((0.25j, -0.25j), (0, 0))
    rep = B.asymptotic_check_real(p, np.linspace(5, 10, 40), negative_points=(5.0, 10.0))
    assert rep.decay_ok
