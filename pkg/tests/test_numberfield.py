import math
from fractions import Fraction

import numpy as np
import pytest

from voronoi_twist import numberfield as nf


def test_embed_rational(Q):
    assert nf.embed(Q, [5]).values[0] == 5.0


def test_embed_gaussian(Qi):
    assert nf.embed(Qi, [3, 2]).values[0] == pytest.approx(3 + 2j)


def test_embed_real_quadratic(Qsqrt2):
    v = nf.embed(Qsqrt2, [1, 1]).values.real
    assert v == pytest.approx([1 + math.sqrt(2), 1 - math.sqrt(2)], abs=1e-12)


@pytest.mark.parametrize("name, coords, norm, trace", [
    ("Qi", [3, 2], 13, 6),
    ("Qsqrt2", [1, 1], -1, 2),
    ("Q", [-7], -7, -7),
])
def test_norm_trace(name, coords, norm, trace):
    F = nf.load_field(name)
    assert nf.norm_trace(F, F.integer(coords)) == (Fraction(norm), Fraction(trace))


@pytest.mark.parametrize("name, T, count", [("Q", 5, 4), ("Qi", 2, 8), ("Qsqrt2", 4, 24)])
def test_lattice_counts(name, T, count):
    F = nf.load_field(name)
    pts = nf.enumerate_lattice(F, T)
    assert len(pts) == count == nf.lattice_count(F, T)
    assert not np.any(np.all(pts == 0, axis=1))


def test_lattice_boundary_included(Q):
    assert sorted(nf.enumerate_lattice(Q, 4)[:, 0].tolist()) == [-2, -1, 1, 2]


def test_lattice_cap(Qsqrt2):
    with pytest.raises(nf.SearchCapError):
        nf.enumerate_lattice(Qsqrt2, 1e5, cap=1000)


def test_dirichlet_sqrt2_convergent(Q):
    r = nf.dirichlet_approx(Q, [math.sqrt(2)], 10)
    assert (r.alpha.coords, r.beta.coords) == ((7,), (5,))
    assert r.residuals[0] == pytest.approx(abs(5 * math.sqrt(2) - 7), abs=1e-12)
    assert r.satisfies_bounds()


def test_dirichlet_zero(Qsqrt2):
    r = nf.dirichlet_approx(Qsqrt2, [0.0, 0.0], 10)
    assert r.alpha.is_zero and r.beta == Qsqrt2.one()
    assert np.all(r.residuals == 0)


def test_dirichlet_pi_e(Qsqrt2):
    assert nf.dirichlet_approx(Qsqrt2, [math.pi, math.e], 20).satisfies_bounds()


def test_dirichlet_rational_theta_exact(Q):
    r = nf.dirichlet_approx(Q, [3 / 7], 10)
    assert Fraction(r.alpha.coords[0], r.beta.coords[0]) == Fraction(3, 7)
    assert r.residuals[0] < 1e-12


def test_dirichlet_cap(Qsqrt2):
    with pytest.raises(nf.SearchCapError):
        nf.dirichlet_approx(Qsqrt2, [0.1, 0.2], 1e4, cap=10_000)


def test_make_coprime_rational(Q):
    a, b, d = nf.make_coprime(Q, Q.integer([4]), Q.integer([6]))
    assert (a, b, d) == (Q.integer([2]), Q.integer([3]), Q.integer([2]))
    a, b, d = nf.make_coprime(Q, Q.integer([3]), Q.integer([5]))
    assert d == Q.one()


def test_make_coprime_gaussian(Qi):
    a, b, d = nf.make_coprime(Qi, Qi.integer([1, 1]), Qi.integer([2, 0]))
    assert a == Qi.one() and b == Qi.integer([1, -1]) and d == Qi.integer([1, 1])
    assert a * d == Qi.integer([1, 1]) and b * d == Qi.integer([2, 0])


def test_mod_inverse_rational(Q):
    assert nf.mod_inverse(Q, Q.integer([3]), Q.integer([7])) == Q.integer([5])


def test_mod_inverse_gaussian(Qi):
    a, m = Qi.integer([1, 1]), Qi.integer([3, 0])
    x = nf.mod_inverse(Qi, a, m)
    # canonical representative in the residue ordering; 2-2i is the same class
    assert x == Qi.integer([2, 1])
    assert ((a * x - Qi.one()) / m).is_integral
    assert ((x - Qi.integer([2, -2])) / m).is_integral


def test_mod_inverse_not_coprime(Q):
    with pytest.raises(nf.NotCoprimeError) as e:
        nf.mod_inverse(Q, Q.integer([2]), Q.integer([4]))
    assert e.value.divisor == Q.integer([2])


def test_residue_ring_size(Qi):
    ring = nf.residue_ring(Qi, Qi.integer([3, 0]))
    assert ring.size == 9
    assert len(ring.units()) == 8


def test_unsupported_field():
    F = nf.NumberField.from_config({"name": "Qsqrt10", "min_poly": [-10, 0, 1],
                                    "norm_euclidean": False})
    with pytest.raises(nf.UnsupportedFieldError):
        nf.gcd(F, F.integer([2, 0]), F.integer([3, 1]))


@pytest.mark.parametrize("name, gamma, T, count", [
    ("Q", [5], 10, 2),
    ("Qsqrt2", [1, 0], (10, 10), 10),
    ("Qsqrt2", [1, 0], (1, 1), 2),
])
def test_unit_orbits(name, gamma, T, count):
    F = nf.load_field(name)
    assert nf.unit_orbit_count(F, F.integer(gamma), T) == count


def test_dirichlet_constant_rational(Q):
    assert nf.dirichlet_constant(Q) == 1.0
