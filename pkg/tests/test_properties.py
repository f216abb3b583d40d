"""Property-based checks of the structural invariants."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from voronoi_twist import bessel as B, coeffs, kloosterman as K, numberfield as nf, twistsums as ts
from voronoi_twist import voronoi as V

FIELDS = {name: nf.load_field(name) for name in ("Q", "Qi", "Qsqrt2", "Qsqrt5", "Qsqrtm3")}
DELTA = coeffs.make_provider("delta")
field_names = st.sampled_from(sorted(FIELDS))
small = st.integers(-40, 40)


def _element(F, draw_coords):
    return F.integer(draw_coords[: F.degree])


@given(field_names, st.lists(small, min_size=2, max_size=2))
def test_norm_is_product_of_modules(name, c):
    F = FIELDS[name]
    e = _element(F, c)
    assume(not e.is_zero)
    p = nf.embed(F, e)
    assert abs(float(e.norm)) == pytest.approx(float(np.prod(p.modules)), rel=1e-9)
    assert float(e.trace) == pytest.approx(p.trace, rel=1e-9, abs=1e-9)


@given(field_names, st.integers(1, 12))
def test_lattice_count_formula(name, half):
    F = FIELDS[name]
    T = 2 * half + 0.5
    assert len(nf.enumerate_lattice(F, T)) == (2 * half + 1) ** F.degree - 1


@settings(max_examples=40)
@given(st.sampled_from(["Q", "Qi", "Qsqrt2"]), st.lists(st.floats(-1, 1), min_size=2, max_size=2),
       st.sampled_from([3.0, 10.0, 25.0]))
def test_dirichlet_bounds(name, vals, Q):
    F = FIELDS[name]
    theta = [complex(vals[0], vals[1])] if F.r2 else vals[: F.n_places]
    assert nf.dirichlet_approx(F, theta, Q).satisfies_bounds()


@given(st.sampled_from(["Q", "Qi", "Qsqrt2", "Qsqrtm3"]), st.lists(small, min_size=4, max_size=4))
def test_make_coprime_reconstructs(name, c):
    F = FIELDS[name]
    a, b = F.integer(c[: F.degree]), F.integer(c[2: 2 + F.degree])
    assume(not a.is_zero and not b.is_zero)
    a2, b2, d = nf.make_coprime(F, a, b)
    assert a2 * d == a and b2 * d == b
    assert nf.gcd(F, a2, b2).is_unit


@given(st.sampled_from(["Q", "Qi", "Qsqrt2"]), st.lists(small, min_size=4, max_size=4))
def test_mod_inverse_is_inverse(name, c):
    F = FIELDS[name]
    a, m = F.integer(c[: F.degree]), F.integer(c[2: 2 + F.degree])
    assume(not m.is_zero and not m.is_unit and not a.is_zero)
    try:
        x = nf.mod_inverse(F, a, m)
    except nf.NotCoprimeError as e:
        assert not e.divisor.is_unit
        assert (a / e.divisor).is_integral and (m / e.divisor).is_integral
        return
    assert ((a * x - F.one()) / m).is_integral


@given(st.integers(-5, 5), st.integers(-5, 5), st.floats(1.0, 50.0), st.floats(1.0, 50.0))
def test_unit_orbit_bound(x, y, T1, T2):
    F = FIELDS["Qsqrt2"]
    g = F.integer([x, y])
    assume(not g.is_zero)
    n = abs(float(g.norm))
    count = nf.unit_orbit_count(F, g, (T1, T2))
    bound = 2 * (max(math.log(T1 * T2 / n), 0) / math.log(1 + math.sqrt(2)) + 1)
    assert count <= bound + 1e-9


@given(st.integers(-300, 300), st.integers(-300, 300), st.integers(1, 300))
def test_kloosterman_real_and_symmetric(a, b, c):
    s_ab = K.kloosterman_rational(a, b, c)
    assert K.kloosterman_rational(b, a, c) == pytest.approx(s_ab, abs=1e-10)
    direct = sum(complex(math.cos(2 * math.pi * (a * x + b * pow(x, -1, c)) / c),
                         math.sin(2 * math.pi * (a * x + b * pow(x, -1, c)) / c))
                 for x in range(1, c + 1) if math.gcd(x, c) == 1) if c > 1 else 1
    assert abs(complex(direct).imag) < 1e-10
    assert complex(direct).real == pytest.approx(s_ab, abs=1e-9)


@given(st.integers(1, 300), st.integers(1, 300), st.integers(1, 300))
def test_weil_bound_pointwise(a, b, c):
    bound = K.num_divisors(c) * math.sqrt(c) * math.sqrt(math.gcd(math.gcd(a, b), c))
    assert abs(K.kloosterman_rational(a, b, c)) <= bound * (1 + 1e-9)


@given(st.integers(1, 200), st.integers(1, 200))
def test_tau_hecke_relation(m, n):
    g = math.gcd(m, n)
    rhs = sum(d ** 11 * coeffs.tau(m * n // (d * d)) for d in range(1, g + 1) if g % d == 0)
    assert coeffs.tau(m) * coeffs.tau(n) == rhs


@given(st.integers(1, 100), st.integers(1, 100))
def test_sym2_symmetric(m, n):
    assert coeffs.gl3_sym2(m, n) == pytest.approx(coeffs.gl3_sym2(n, m), abs=1e-10)


@given(st.integers(1, 50), st.integers(1, 50), st.integers(1, 50), st.integers(1, 50))
def test_sym2_multiplicative(m1, n1, m2, n2):
    assume(math.gcd(m1 * n1, m2 * n2) == 1)
    assert coeffs.gl3_sym2(m1 * m2, n1 * n2) == pytest.approx(
        coeffs.gl3_sym2(m1, n1) * coeffs.gl3_sym2(m2, n2), abs=1e-10)


@given(st.floats(-3, 3), st.integers(2, 400))
def test_twisted_sum_periodic_and_conjugate(theta, T):
    s = ts.rational_sums(DELTA, np.array([theta, theta + 1, -theta]), T)
    assert abs(s[1]) == pytest.approx(abs(s[0]), abs=1e-10)
    assert s[2] == pytest.approx(np.conj(s[0]), abs=1e-10)


@given(st.sampled_from(["Q", "Qi", "Qsqrt2"]), st.floats(0, 1), st.floats(0, 1), st.integers(2, 12))
def test_sharp_sum_shift_invariance(name, t0, t1, T):
    F = FIELDS[name]
    prov = coeffs.make_provider("synthetic", name)
    if F.degree == 1:
        th, shifted = [t0], [t0 + 1]
    elif F.r2:
        th, shifted = [complex(t0, t1)], [complex(t0, t1) + 0.5]   # Tr(gamma/2) is an integer on Z[i]
    else:
        th, shifted = [t0, t1], [t0 + 1, t1 + 1]
    a = ts.sharp_sum(ts.TwistQuery(prov, th, T))
    b = ts.sharp_sum(ts.TwistQuery(prov, shifted, T))
    assert abs(a) == pytest.approx(abs(b), abs=1e-9)


@given(st.integers(2, 64), st.integers(-300, 300))
def test_smoothing_kernel_dual(X, c):
    k = ts.SmoothingKernel(X)
    d = k.dual([c])
    if abs(c) <= X / 2:
        assert d == 1
    elif abs(c) >= X / 2 + 1:
        assert d == 0
    else:
        assert 0 < d < 1


@settings(max_examples=25)
@given(st.integers(-30, 30), st.integers(1, 12), st.integers(-3, 3))
def test_lhs_periodic(alpha, beta, k):
    a = V.lhs_sum(V.VoronoiInstance.rational(2, alpha, beta, 15.0, rho=0.01))
    b = V.lhs_sum(V.VoronoiInstance.rational(2, alpha + k * beta, beta, 15.0, rho=0.01))
    assert abs(a - b) < 1e-12


@settings(max_examples=20)
@given(st.integers(1, 3), st.floats(-2.5, 2.5), st.floats(-2.5, 2.5),
       st.lists(st.integers(0, 1), min_size=3, max_size=3), st.floats(0.2, 4.0), st.booleans())
def test_contour_independence(r, t1, t2, delta, x, negative):
    mu = {1: (0.0,), 2: (1j * t1, -1j * t1), 3: (1j * t1, 1j * t2, -1j * (t1 + t2))}[r]
    p = B.BesselParamsReal(mu, tuple(delta[:r]))
    xs = np.array([-x if negative else x])
    c1 = B.Contour.for_poles(p.rightmost_pole(), p.max_imag(), sigma1=-1.0)
    c2 = B.Contour.for_poles(p.rightmost_pole(), p.max_imag(), sigma1=-1.5, angle=0.7 * math.pi)
    v1 = B.evaluate_real(p, xs, method="contour", contour=c1).value
    v2 = B.evaluate_real(p, xs, method="contour", contour=c2).value
    assert v1 == pytest.approx(v2, abs=1e-8 * max(1.0, abs(v1[0])))


@given(st.lists(st.floats(-1e6, 1e6), min_size=0, max_size=300))
def test_pairwise_sum_matches_fsum(v):
    arr = np.array(v, dtype=complex)
    assert V.pairwise_sum(arr).real == pytest.approx(math.fsum(v), abs=1e-6)


@given(st.integers(4, 64), st.floats(0.0, 3.0))
def test_trapezoid_exact_matches_float(X, t):
    k = ts.SmoothingKernel(X)
    q = Fraction(t).limit_denominator(1000)
    assert float(k.g_exact(q)) == pytest.approx(float(k.g(float(q))), abs=1e-12)
