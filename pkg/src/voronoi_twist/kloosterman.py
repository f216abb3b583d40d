"""Kloosterman sums over Z and over O/(beta) for norm-Euclidean fields."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .numberfield import (FieldElement, NumberField, gcd, mod_inverse, residue_ring, to_residue)


def _e(frac: Fraction) -> complex:
    """e(x) for an exact rational x, reduced mod 1 before leaving exact arithmetic."""
    r = frac - math.floor(frac)
    return complex(math.cos(2 * math.pi * r), math.sin(2 * math.pi * r))


def unit_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Residues x mod c coprime to c and their inverses."""
    xs = [x for x in range(c) if math.gcd(x, c) == 1]
    if c == 1:
        return np.array([0]), np.array([0])
    return np.array(xs), np.array([pow(x, -1, c) for x in xs])


def kloosterman_rational(a: int, b: int, c: int) -> float:
    """S(a, b; c) = sum over x mod c coprime to c of e((a x + b xbar)/c)."""
    c = int(c)
    if c < 1:
        raise ValueError("modulus must be positive")
    x, xi = unit_inverses(c)
    num = (int(a) % c * x + int(b) % c * xi) % c
    val = np.sum(np.exp(2j * np.pi * num / c))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val)):
        raise AssertionError(f"S({a},{b};{c}) has imaginary part {val.imag}")
    return float(val.real)


def kloosterman_row(c: int) -> np.ndarray:
    """S(1, m; c) for m = 0..c-1 in one FFT."""
    c = int(c)
    x, xi = unit_inverses(c)
    amp = np.zeros(c, dtype=complex)
    # S(1, m; c) = sum_y e(ybar/c) e(m y/c), summed over units y
    amp[xi] = np.exp(2j * np.pi * x / c)
    return (np.fft.ifft(amp) * c).real


def kloosterman_matrix(c: int) -> np.ndarray:
    """S(a, b; c) for all a, b mod c via a two-dimensional FFT of the inverse permutation."""
    x, xi = unit_inverses(c)
    perm = np.zeros((c, c))
    perm[x, xi] = 1.0
    return (np.fft.ifft2(perm) * c * c).real


def num_divisors(n: int) -> int:
    count, d = 0, 1
    while d * d <= n:
        if n % d == 0:
            count += 1 if d * d == n else 2
        d += 1
    return count


@dataclass(frozen=True)
class WeilRow:
    c: int
    max_abs: float
    bound: float
    ratio: float
    violations: int


@dataclass
class WeilReport:
    rows: list[WeilRow]

    @property
    def violations(self) -> int:
        return sum(r.violations for r in self.rows)

    @property
    def max_ratio(self) -> float:
        return max(r.ratio for r in self.rows)

    def csv_rows(self):
        for r in self.rows:
            yield (r.c, r.max_abs, r.bound, r.ratio)


def weil_check(c_max: int, rel_slack: float = 1e-9) -> WeilReport:
    """Exhaustive |S(a,b;c)| <= d(c) sqrt(c) sqrt(gcd(a,b,c)) over all a, b mod c, c <= c_max."""
    if c_max > 10**4:
        raise ValueError("c_max is capped at 10^4")
    rows = []
    for c in range(1, c_max + 1):
        s = np.abs(kloosterman_matrix(c))
        a = np.arange(c)
        g = np.gcd(np.gcd(a[:, None], a[None, :]), c)
        bound = num_divisors(c) * math.sqrt(c) * np.sqrt(g)
        ratio = s / bound
        viol = int(np.sum(s > bound * (1 + rel_slack) + 1e-9))
        k = np.unravel_index(np.argmax(ratio), ratio.shape)
        rows.append(WeilRow(c, float(s.max()), float(bound[k]), float(ratio[k]), viol))
    return WeilReport(rows)


# -- number fields ---------------------------------------------------------------------


@dataclass(frozen=True)
class KloostermanInstance:
    field: NumberField
    beta: FieldElement
    gamma: FieldElement
    gamma_p: FieldElement


def _trace_mod_one(x: FieldElement) -> Fraction:
    t = x.trace
    return t - math.floor(t)


def kloosterman_field(inst: KloostermanInstance) -> complex:
    """S_b(gamma, gamma'; beta) by enumerating (O/beta)^x with exact traces."""
    F, beta = inst.field, inst.beta
    if beta.is_zero:
        raise ValueError("beta must be nonzero")
    if beta.is_unit:
        # empty modulus: the single nu = 1 term
        return _e(((inst.gamma + inst.gamma_p) / beta).trace)
    g = to_residue(F, inst.gamma, beta)
    gp = to_residue(F, inst.gamma_p, beta)
    ring = residue_ring(F, beta)
    total = 0j
    for nu in ring.elements():
        if nu.is_zero or not gcd(F, nu, beta).is_unit:
            continue
        nubar = mod_inverse(F, nu, beta)
        total += _e(_trace_mod_one((g * nu + gp * nubar) / beta))
    return total


def kloosterman_field_bruteforce(inst: KloostermanInstance) -> complex:
    """Oracle: unit residues found by searching for inverses directly, no gcd machinery."""
    F, beta = inst.field, inst.beta
    ring = residue_ring(F, beta)
    elems = ring.elements()
    g = to_residue(F, inst.gamma, beta)
    gp = to_residue(F, inst.gamma_p, beta)
    total = 0j
    one = F.one()
    for nu in elems:
        inv = None
        for mu in elems:
            if ring.reduce(nu * mu) == ring.reduce(one):
                inv = mu
                break
        if inv is None:
            continue
        total += _e(((g * nu + gp * inv) / beta).trace)
    return total
