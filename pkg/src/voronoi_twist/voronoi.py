"""Both sides of the Voronoi summation formula for ranks 2 and 3.

The sign conventions are fixed by the rational case:

    sum_n A(n) e(a n / b) f(n)
      = (1/|b|) sum_n A(n) e(-abar n / b) f~(n / b^2)                          (rank 2)
      = sum_{g | b} (|g| / b^2) sum_n A(g, n) S(1, abar n; b / g) f~(n g^2 / b^3)   (rank 3)

Here abar a = 1 mod b and S uses e(+x / c).  Over a general norm-Euclidean field
|.| becomes the absolute norm, e(x) becomes e(Tr x), and f~ is the product of the
per-place transforms.

Over Q the dual sum is truncated in doubling blocks of n.  Summation stops once a
block's absolute mass drops below the target and the block lies past the
stationary window of f~.  The last block's mass is reported as the tail estimate.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bessel import BesselParamsReal
from .coeffs import CoefficientProvider, lattice_norms, make_provider
from .hankel import InterpolatedHankel, MellinHankel, TestFunction, WeightSpec, hankel_complex, hankel_direct, hankel_real
from .kloosterman import KloostermanInstance, kloosterman_field, kloosterman_row
from .numberfield import (FieldElement, NumberField, embed_coords, enumerate_lattice, load_field,
                          make_coprime, mod_inverse, residue_ring)


class TruncationError(RuntimeError):
    """The dual sum did not reach its tail target within the configured radius."""


# -- instance ----------------------------------------------------------------------------


@dataclass
class VoronoiInstance:
    field: NumberField
    provider: CoefficientProvider
    params: tuple            # one BesselParamsReal / BesselParamsComplex per archimedean place
    alpha: FieldElement
    beta: FieldElement
    tests: tuple             # one TestFunction per archimedean place
    tol: float = 1e-6        # relative target for the dual-sum truncation
    radius: float | None = None   # fixed dual truncation: max |y| over Q, box size otherwise
    max_radius: float = 2e4
    divisor_unit: int = 1    # multiply every divisor generator by this sign (gamma' -> -gamma')
    hankel_tol: float = 1e-10

    def __post_init__(self):
        F = self.field
        a = self.alpha if isinstance(self.alpha, FieldElement) else F.integer(_coords(F, self.alpha))
        b = self.beta if isinstance(self.beta, FieldElement) else F.integer(_coords(F, self.beta))
        if b.is_zero:
            raise ZeroDivisionError("beta must be nonzero")
        a, b, _ = make_coprime(F, a, b)
        if F.degree == 1 and b.coords[0] < 0:
            a, b = -a, -b
        self.alpha, self.beta = a, b
        if not isinstance(self.params, tuple):
            self.params = (self.params,)
        if not isinstance(self.tests, tuple):
            self.tests = (self.tests,)
        if len(self.params) != F.n_places or len(self.tests) != F.n_places:
            raise ValueError(f"need one kernel and one test function per place ({F.n_places})")

    @property
    def rank(self) -> int:
        return self.provider.rank

    @property
    def b(self) -> FieldElement:
        """Generator of the ideal b.  For coprime integral alpha, beta this is beta itself."""
        return self.beta

    @property
    def b_norm(self) -> int:
        return abs(int(self.beta.norm))

    @property
    def alpha_bar(self) -> FieldElement:
        if self.beta.is_unit:
            return self.field.zero()
        return mod_inverse(self.field, self.alpha, self.beta)

    @classmethod
    def rational(cls, rank: int, alpha: int, beta: int, T: float, rho: float = 0.0,
                 width: float = 2.0, sides: str = "positive", provider: CoefficientProvider | None = None,
                 params: BesselParamsReal | None = None, **kw) -> "VoronoiInstance":
        """Rank 2 uses Delta by default, rank 3 its symmetric square."""
        if provider is None:
            provider = make_provider("delta" if rank == 2 else "sym2delta")
        if params is None:
            params = BesselParamsReal.delta_form() if rank == 2 else BesselParamsReal.sym2_delta()
        f = TestFunction(WeightSpec(T, width=width, sides=sides), rho)
        return cls(load_field("Q"), provider, (params,), alpha, beta, (f,), **kw)


def _coords(F: NumberField, x) -> list[int]:
    if isinstance(x, (int, np.integer)):
        return [int(x)] + [0] * (F.degree - 1)
    return [int(c) for c in x]


@dataclass
class VoronoiReport:
    lhs: complex
    rhs: complex
    tail: float
    abs_residual: float
    rel_residual: float
    lhs_terms: int
    rhs_terms: int
    radius: float
    seconds: float
    tol: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("lhs", "rhs"):
            d[k] = [float(np.real(d[k])), float(np.imag(d[k]))]
        return d


# -- exact characters ----------------------------------------------------------------------


def _trace_row(F: NumberField, x: FieldElement) -> tuple[np.ndarray, int]:
    """Integers k_j and D with Tr(omega_j x) = k_j / D for the integral basis omega_j."""
    traces = []
    for j in range(F.degree):
        e = F.element([int(i == j) for i in range(F.degree)])
        traces.append((e * x).trace)
    D = math.lcm(*[t.denominator for t in traces])
    return np.array([int(t * D) for t in traces], dtype=object), D


def character(F: NumberField, x: FieldElement, coords: np.ndarray, sign: int = 1) -> np.ndarray:
    """e(sign * Tr(x * gamma)) at integer coordinate rows, reduced mod 1 in exact arithmetic."""
    k, D = _trace_row(F, x)
    c = np.asarray(coords, dtype=np.int64)
    num = np.zeros(len(c), dtype=np.int64)
    for j in range(F.degree):
        num = (num + (c[:, j] % D) * (int(k[j]) % D)) % D
    return np.exp(sign * 2j * math.pi * num / D)


def pairwise_sum(v: np.ndarray) -> complex:
    """Fixed-order pairwise reduction, independent of any chunking upstream."""
    v = np.asarray(v)
    if v.size == 0:
        return 0j
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0)
        v = v[0::2] + v[1::2]
    return complex(v[0])


# -- left side -------------------------------------------------------------------------------


def _support_box(F: NumberField, tests: tuple) -> float:
    """Half-width of a coordinate box containing every lattice point in the product support."""
    radii = []
    for v, f in enumerate(tests):
        r = f.weight.support[1]
        radii.extend([r] if v < F.r1 else [r, r])
    inv = np.linalg.inv(F.real_embedding_matrix)
    return float(np.max(np.abs(inv) @ np.array(radii)))


def _product_test(F: NumberField, tests: tuple, emb: np.ndarray) -> np.ndarray:
    out = np.ones(len(emb), dtype=complex)
    for v, f in enumerate(tests):
        val = emb[:, v].real if v < F.r1 else emb[:, v]
        out *= f(val)
    return out


def lhs_terms(inst: VoronoiInstance) -> tuple[np.ndarray, np.ndarray]:
    """Lattice points in the support of f and the summands A(gamma) e(Tr(alpha gamma / beta)) f(gamma)."""
    F = inst.field
    if any(f.is_zero for f in inst.tests):
        return np.zeros((0, F.degree), dtype=np.int64), np.zeros(0, dtype=complex)
    if F.degree == 1:
        b = inst.tests[0].weight.support[1]
        n = np.arange(1, int(math.floor(b)) + 1)
        pts = np.concatenate([n, -n])[:, None]
    else:
        H = _support_box(F, inst.tests)
        pts = enumerate_lattice(F, 2 * math.floor(H) + 1)
    emb = embed_coords(F, pts)
    fv = _product_test(F, inst.tests, emb)
    keep = fv != 0
    pts, fv = pts[keep], fv[keep]
    a = inst.provider.lattice_values(pts)
    chi = character(F, inst.alpha / inst.beta, pts)
    return pts, a * chi * fv


def lhs_sum(inst: VoronoiInstance) -> complex:
    return pairwise_sum(lhs_terms(inst)[1])


def lhs_scale(inst: VoronoiInstance) -> float:
    """Sum of |A f| over the support, the natural size of either side."""
    _, t = lhs_terms(inst)
    return float(np.sum(np.abs(t)))


# -- dual transforms ----------------------------------------------------------------------------


class _RealTransform:
    """f~ at rational points y = num / den for one real place.

    Discrete-series rank 2 goes through the direct x-space route.  Everything else goes
    through the Mellin route behind a Chebyshev interpolant in |y|^(1/r); its panels act
    as the shared cache, filled under a lock.
    """

    def __init__(self, params: BesselParamsReal, f: TestFunction, y_range, tol: float):
        self.params, self.f = params, f
        self._lock = threading.Lock()
        self._interp = None
        if not params.is_discrete_gl2 and not f.is_zero:
            mellin = MellinHankel(params, f, tol=tol, y_range=y_range)
            self._interp = InterpolatedHankel(mellin, params.rank, f.weight.support[1],
                                              y_range[0] ** (1 / params.rank))

    def __call__(self, num: np.ndarray, den: int) -> np.ndarray:
        y = np.asarray(num, dtype=float) / den
        if self._interp is None:
            return hankel_direct(self.params, self.f, y)
        with self._lock:
            return self._interp(y)

    def interpolation_error(self) -> float:
        return 0.0 if self._interp is None else self._interp.sample_error()


def _rational_transform(inst: VoronoiInstance, y_lo: float) -> _RealTransform:
    hi = inst.radius if inst.radius is not None else inst.max_radius
    key = ("_transform", y_lo, hi)
    cached = getattr(inst, "_transform_cache", None)
    if cached is not None and cached[0] == key:
        return cached[1]
    tr = _RealTransform(inst.params[0], inst.tests[0], (y_lo, 2 * hi), inst.hankel_tol)
    inst._transform_cache = (key, tr)
    return tr


def _window_edge(inst: VoronoiInstance) -> float:
    """|y| beyond which the stationary window of f~ has been passed."""
    f = inst.tests[0]
    T, width, r = f.weight.T, f.weight.width, inst.rank
    rho = abs(complex(f.rho))
    return 10 * max(1.0, (T * rho) ** r * width ** (r * (r - 1))) / T


@dataclass
class DualSum:
    value: complex
    tail: float
    terms: int
    radius: float
    blocks: list = field(default_factory=list)


def _blocked_dual(block_terms, y_step: float, target: float, inst: VoronoiInstance) -> DualSum:
    """Sum block_terms(lo, hi) over doubling blocks of n until the tail target is met.

    y_step converts n to |y|; block_terms returns the summand array for lo <= n < hi.
    """
    edge = _window_edge(inst)
    parts, blocks = [], []
    lo, hi, terms, tail = 1, 64, 0, float("inf")
    while True:
        if inst.radius is not None:
            hi = min(hi, int(math.floor(inst.radius / y_step)) + 1)
        if hi <= lo:
            break
        t = block_terms(lo, hi)
        parts.append(t)
        mass = float(np.sum(np.abs(t)))
        blocks.append((lo, hi, mass))
        terms += len(t)
        tail = mass
        y_hi = (hi - 1) * y_step
        if inst.radius is None and mass < target and y_hi >= edge:
            break
        if inst.radius is None and y_hi > inst.max_radius:
            raise TruncationError(f"tail mass {mass:.3e} above target {target:.3e} at |y| = {y_hi:.1f}")
        lo, hi = hi, 2 * hi
    value = pairwise_sum(np.concatenate(parts)) if parts else 0j
    return DualSum(value, tail, terms, (lo - 1) * y_step if blocks else 0.0, blocks)


def _default_target(inst: VoronoiInstance) -> float:
    return inst.tol * max(lhs_scale(inst), 1e-300) / 10


def rhs_sum_gl2(inst: VoronoiInstance, target: float | None = None) -> DualSum:
    if inst.rank != 2:
        raise ValueError("rank-2 dual sum needs a rank-2 provider")
    if inst.field.degree != 1:
        return _rhs_general(inst, 2)
    target = _default_target(inst) if target is None else target
    b = int(inst.beta.coords[0])
    abar = int(inst.alpha_bar.coords[0]) if b > 1 else 0
    den = b * b
    tr = _rational_transform(inst, 1 / den)
    prov = inst.provider.dual()

    def block(lo, hi):
        n = np.arange(lo, hi)
        a = prov.values_by_norm(n)
        out = []
        for s in (1, -1):
            chi = np.exp(-2j * math.pi * ((s * abar * n) % b) / b)
            out.append(a * chi * tr(s * n, den) / b)
        return np.concatenate(out)

    return _blocked_dual(block, 1 / den, target, inst)


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def rhs_sum_gl3(inst: VoronoiInstance, target: float | None = None) -> DualSum:
    if inst.rank != 3:
        raise ValueError("rank-3 dual sum needs a rank-3 provider")
    if inst.field.degree != 1:
        return _rhs_general(inst, 3)
    target = _default_target(inst) if target is None else target
    b = int(inst.beta.coords[0])
    abar = int(inst.alpha_bar.coords[0]) if b > 1 else 0
    den = b ** 3
    tr = _rational_transform(inst, 1 / den)
    prov = inst.provider.dual()
    divs = divisors(b)
    total, tail, terms, radius, blocks = 0j, 0.0, 0, 0.0, []
    for g in divs:
        gp = inst.divisor_unit * g
        c = b // gp                     # signed modulus; S(.,.;-c) = conj S(.,.;c)
        row = kloosterman_row(abs(c))
        if c < 0:
            row = np.conj(row)
        weight = abs(gp) / b ** 2

        def block(lo, hi, g=g, row=row, c=c, weight=weight):
            n = np.arange(lo, hi)
            a = prov.pair_values(g, n)
            out = []
            for s in (1, -1):
                kl = row[(s * abar * n) % abs(c)]
                out.append(weight * a * kl * tr(s * n * g * g, den))
            return np.concatenate(out)

        part = _blocked_dual(block, g * g / den, target / len(divs), inst)
        total += part.value
        tail += part.tail
        terms += part.terms
        radius = max(radius, part.radius)
        blocks.append({"divisor": gp, "value": [part.value.real, part.value.imag],
                       "terms": part.terms, "tail": part.tail})
    return DualSum(total, tail, terms, radius, blocks)


# -- general fields (structural) ----------------------------------------------------------------


def _place_transform(params, f: TestFunction, u: np.ndarray, real: bool, tol: float) -> np.ndarray:
    if real:
        return hankel_real(params, f, u.real, tol=tol, estimate_error=False).value
    return hankel_complex(params, f, u, tol=tol)


def _dual_points(inst: VoronoiInstance) -> np.ndarray:
    box = inst.radius if inst.radius is not None else 8.0
    return enumerate_lattice(inst.field, 2 * math.floor(box) + 1)


def field_divisors(F: NumberField, beta: FieldElement, box: int | None = None) -> list[FieldElement]:
    """Divisors of beta up to units, found by a bounded coordinate search."""
    if box is None:
        box = 2 * int(max(abs(c) for c in beta.coords)) + 2
    reps: list[FieldElement] = []
    for c in enumerate_lattice(F, 2 * box + 1):
        d = F.integer([int(x) for x in c])
        if not (beta / d).is_integral:
            continue
        if any((d / r).is_unit for r in reps):
            continue
        reps.append(d)
    return reps


def _kloosterman_table(F: NumberField, modulus: FieldElement, abar: FieldElement, pts: np.ndarray):
    """S(1, abar * eta; modulus) at each lattice point eta, one evaluation per residue class."""
    if modulus.is_unit:
        return np.array([kloosterman_field(KloostermanInstance(F, modulus, F.one(), abar * F.integer(
            [int(x) for x in p]))) for p in pts])
    ring = residue_ring(F, modulus)
    cache: dict = {}
    out = np.empty(len(pts), dtype=complex)
    for i, p in enumerate(pts):
        key = ring.reduce(abar * F.integer([int(x) for x in p])).coords
        if key not in cache:
            cache[key] = kloosterman_field(KloostermanInstance(F, modulus, F.one(), F.integer(
                [int(x) for x in key])))
        out[i] = cache[key]
    return out


def _rhs_general(inst: VoronoiInstance, rank: int) -> DualSum:
    """Dual sum over a fixed coordinate box; no adaptive truncation (structural use only)."""
    F, beta = inst.field, inst.beta
    pts = _dual_points(inst)
    emb_beta = embed_coords(F, np.array([[float(c) for c in beta.coords]]))[0]
    abar = inst.alpha_bar
    prov = inst.provider.dual()
    norm_pts = lattice_norms(F, pts)
    nb = inst.b_norm
    if rank == 2:
        chi = character(F, abar / beta, pts, sign=-1)
        ft = np.ones(len(pts), dtype=complex)
        emb = embed_coords(F, pts)
        for v in range(F.n_places):
            u = emb[:, v] / emb_beta[v] ** 2
            ft *= _place_transform(inst.params[v], inst.tests[v], u, v < F.r1, inst.hankel_tol)
        terms = prov.values_by_norm(norm_pts) * chi * ft / nb
        return DualSum(pairwise_sum(terms), float("nan"), len(terms), float(inst.radius or 8.0))
    total, blocks = 0j, []
    for d in field_divisors(F, beta):
        gp = d * inst.divisor_unit
        emb_g = embed_coords(F, np.array([[float(c) for c in gp.coords]]))[0]
        ng = abs(int(gp.norm))
        ft = np.ones(len(pts), dtype=complex)
        emb = embed_coords(F, pts)
        for v in range(F.n_places):
            u = emb[:, v] * emb_g[v] ** 2 / emb_beta[v] ** 3
            ft *= _place_transform(inst.params[v], inst.tests[v], u, v < F.r1, inst.hankel_tol)
        kl = _kloosterman_table(F, beta / gp, abar, pts)
        coef = prov.pair_values(ng, norm_pts)
        terms = ng / nb ** 2 * coef * kl * ft
        part = pairwise_sum(terms)
        total += part
        blocks.append({"divisor": [str(c) for c in gp.coords], "value": [part.real, part.imag]})
    return DualSum(total, float("nan"), len(pts), float(inst.radius or 8.0), blocks)


# -- identity check --------------------------------------------------------------------------------


def rhs_sum(inst: VoronoiInstance, target: float | None = None) -> DualSum:
    if inst.rank == 2:
        return rhs_sum_gl2(inst, target)
    if inst.rank == 3:
        return rhs_sum_gl3(inst, target)
    raise ValueError(f"rank {inst.rank} not supported")


def verify_identity(inst: VoronoiInstance) -> VoronoiReport:
    t0 = time.perf_counter()
    pts, terms = lhs_terms(inst)
    lhs = pairwise_sum(terms)
    scale = float(np.sum(np.abs(terms)))
    target = inst.tol * max(scale, 1e-300) / 10
    dual = rhs_sum(inst, target)
    abs_res = abs(lhs - dual.value)
    rel = abs_res / abs(lhs) if lhs != 0 else abs_res
    tail = dual.tail if math.isfinite(dual.tail) else 0.0
    cache = getattr(inst, "_transform_cache", None)
    interp_err = cache[1].interpolation_error() if cache is not None else 0.0
    allowed = inst.tol * (abs(lhs) if lhs != 0 else scale)
    passed = abs_res <= allowed + tail
    return VoronoiReport(lhs, dual.value, dual.tail, abs_res, rel, len(terms), dual.terms,
                         dual.radius, time.perf_counter() - t0, inst.tol, bool(passed),
                         {"scale": scale, "target": target, "blocks": dual.blocks,
                          "hankel_interpolation_error": interp_err,
                          "alpha": [str(c) for c in inst.alpha.coords],
                          "beta": [str(c) for c in inst.beta.coords]})
