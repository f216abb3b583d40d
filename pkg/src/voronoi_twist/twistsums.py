"""Additively twisted coefficient sums, exponent scans and the smoothing kernel h_X."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats

from .coeffs import CoefficientProvider
from .hankel import WeightSpec
from .numberfield import (EmbeddedPoint, NumberField, dirichlet_approx, embed_coords, enumerate_lattice,
                          load_field)
from .kloosterman import kloosterman_row
from .voronoi import (DualSum, VoronoiInstance, _rational_transform, divisors, lhs_sum, pairwise_sum,
                      rhs_sum)


# -- sums ---------------------------------------------------------------------------------------


@dataclass
class TwistQuery:
    provider: CoefficientProvider
    theta: EmbeddedPoint | Sequence | float
    T: float
    mode: str = "sharp"
    weights: tuple = ()          # one WeightSpec per place in smooth mode
    field: NumberField | None = None

    def __post_init__(self):
        if self.field is None:
            self.field = self.provider.field
        if not isinstance(self.theta, EmbeddedPoint):
            vals = np.atleast_1d(np.asarray(self.theta, dtype=complex))
            self.theta = EmbeddedPoint.from_values(self.field, vals)
        if self.mode not in ("sharp", "smooth"):
            raise ValueError("mode must be 'sharp' or 'smooth'")
        if isinstance(self.weights, WeightSpec):
            self.weights = (self.weights,)
        if self.mode == "smooth" and len(self.weights) != self.field.n_places:
            raise ValueError("smooth mode needs one WeightSpec per place")


def trace_pairing(F: NumberField, theta: EmbeddedPoint, emb: np.ndarray) -> np.ndarray:
    """Tr(theta * gamma) from embeddings: real places once, complex places twice the real part."""
    prod = emb * theta.values[None, :]
    return np.sum(prod[:, :F.r1].real, axis=1) + 2 * np.sum(prod[:, F.r1:].real, axis=1)


def _sum_over(F, provider, theta, pts, weight=None) -> complex:
    if len(pts) == 0:
        return 0j
    emb = embed_coords(F, pts)
    a = provider.lattice_values(pts)
    terms = a * np.exp(2j * math.pi * trace_pairing(F, theta, emb))
    if weight is not None:
        terms = terms * weight(emb)
    return pairwise_sum(terms)


def sharp_sum(q: TwistQuery) -> complex:
    """S_theta(T) over nonzero integers with every coordinate in [-T/2, T/2]."""
    if q.T < 2:
        return 0j
    pts = enumerate_lattice(q.field, q.T)
    return _sum_over(q.field, q.provider, q.theta, pts)


def _weight_product(F: NumberField, weights: tuple):
    def w(emb):
        out = np.ones(len(emb), dtype=complex)
        for v, ws in enumerate(weights):
            out *= ws(emb[:, v].real if v < F.r1 else emb[:, v])
        return out
    return w


def smooth_sum(q: TwistQuery) -> complex:
    """Sum of A(gamma) e(Tr(theta gamma)) w(gamma) over the support of w."""
    F = q.field
    if any(w.amplitude == 0 for w in q.weights):
        return 0j
    radii = []
    for v, w in enumerate(q.weights):
        r = w.support[1]
        radii.extend([r] if v < F.r1 else [r, r])
    H = float(np.max(np.abs(np.linalg.inv(F.real_embedding_matrix)) @ np.array(radii)))
    pts = enumerate_lattice(F, 2 * math.floor(H) + 1)
    wfun = _weight_product(F, q.weights)
    keep = wfun(embed_coords(F, pts)) != 0
    return _sum_over(F, q.provider, q.theta, pts[keep], wfun)


def rational_sums(provider: CoefficientProvider, thetas: np.ndarray, T: float) -> np.ndarray:
    """S_theta(T) over Q for many theta at once: sum_{0<|n|<=T/2} A(|n|) e(theta n)."""
    h = int(math.floor(T / 2))
    if h < 1:
        return np.zeros(len(thetas), dtype=complex)
    n = np.arange(1, h + 1)
    a = provider.values_by_norm(n)
    out = np.empty(len(thetas), dtype=complex)
    for i, th in enumerate(thetas):
        ph = np.exp(2j * math.pi * th * n)
        out[i] = pairwise_sum(a * (ph + np.conj(ph)))
    return out


# -- scans ----------------------------------------------------------------------------------------


GOLDEN = (math.sqrt(5) - 1) / 2


def default_theta_grid(n_rational: int = 16, n_irrational: int = 48) -> np.ndarray:
    """1/q for q = 1..n_rational (q = 1 gives 0) followed by a Kronecker sequence k*golden mod 1."""
    rat = [0.0] + [1.0 / q for q in range(2, n_rational + 1)]
    irr = [(k * GOLDEN) % 1.0 for k in range(1, n_irrational + 1)]
    return np.array(rat[:n_rational] + irr)


@dataclass
class ScanReport:
    T_grid: np.ndarray
    thetas: np.ndarray
    values: np.ndarray           # (len(T), len(theta))
    maxima: np.ndarray
    slope: float
    ci: tuple[float, float]
    intercept: float
    predicted: float | None = None

    @property
    def n_points(self) -> int:
        return len(self.T_grid)

    def rows(self):
        for i, T in enumerate(self.T_grid):
            for j in range(len(self.thetas)):
                v = self.values[i, j]
                yield (float(T), j, float(v.real), float(v.imag), float(abs(v)))

    def summary(self) -> dict:
        return {"slope": self.slope, "ci": list(self.ci), "n_points": self.n_points,
                "predicted": self.predicted, "maxima": [float(m) for m in self.maxima]}


def fit_slope(x: np.ndarray, y: np.ndarray, level: float = 0.95) -> tuple[float, tuple[float, float], float]:
    """Least-squares slope of log y on log x with a t-interval from the residual variance."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    res = stats.linregress(lx, ly)
    if len(lx) > 2:
        half = stats.t.ppf(0.5 + level / 2, len(lx) - 2) * res.stderr
    else:
        half = float("nan")
    return float(res.slope), (float(res.slope - half), float(res.slope + half)), float(res.intercept)


def exponent_scan(provider: CoefficientProvider, theta_grid, T_grid) -> ScanReport:
    thetas = np.asarray(theta_grid, dtype=float)
    Ts = np.asarray(T_grid, dtype=float)
    if len(thetas) == 0 or len(Ts) < 2:
        raise ValueError("need a nonempty theta grid and at least two T values")
    F = provider.field
    if F.degree == 1:
        vals = np.array([rational_sums(provider, thetas, T) for T in Ts])
    else:
        vals = np.array([[sharp_sum(TwistQuery(provider, [th] * F.n_places, T)) for th in thetas]
                         for T in Ts])
    maxima = np.max(np.abs(vals), axis=1)
    slope, ci, icpt = fit_slope(Ts, maxima)
    N = F.degree
    pred = N / 2 if provider.rank == 2 else 3 * N / 4
    return ScanReport(Ts, thetas, vals, maxima, slope, ci, icpt, pred)


def parseval_check(provider: CoefficientProvider, T: float, n_theta: int | None = None) -> tuple[float, float]:
    """(mean over theta of |S_theta(T)|^2 on a Riemann grid, sum of |A(n)|^2 over 0 < |n| <= T/2)."""
    if n_theta is None:
        n_theta = int(4 * T)
    thetas = np.arange(n_theta) / n_theta
    s = rational_sums(provider, thetas, T)
    h = int(math.floor(T / 2))
    a = provider.values_by_norm(np.arange(1, h + 1))
    return float(np.mean(np.abs(s) ** 2)), float(2 * np.sum(np.abs(a) ** 2))


# -- smoothing kernel --------------------------------------------------------------------------------


@dataclass
class SmoothingKernel:
    """Trapezoid g_X per basis coordinate and the kernel h_X whose Fourier transform it is.

    g_X(t) = 1 for |t| <= X/2, falls linearly to 0 at |t| = X/2 + ramp.
    One-dimensional: h(x) = int g(t) e(-x t) dt = sin(2 pi a x) sin(pi ramp x) / (ramp pi^2 x^2),
    with a = X/2 + ramp/2.  In degree N, h_X(x) = |det L| prod_j h(L x)_j where L maps the real
    coordinates of x to (Tr(x omega_j))_j, so that int h_X(x) e(Tr(x gamma)) dx = prod_j g_X(c_j).
    """

    X: float
    ramp: float = 1.0
    field: NumberField = field(default_factory=lambda: load_field("Q"))

    def __post_init__(self):
        if self.X < 2:
            raise ValueError("X must be at least 2")
        if self.ramp <= 0:
            raise ValueError("ramp must be positive")

    @property
    def half_width(self) -> float:
        return self.X / 2 + self.ramp / 2

    def g(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        return np.clip(1 + (self.X / 2 - t) / self.ramp, 0.0, 1.0)

    def g_exact(self, t: Fraction | int) -> Fraction:
        t = abs(Fraction(t))
        X, lam = Fraction(self.X), Fraction(self.ramp)
        return min(Fraction(1), max(Fraction(0), 1 + (X / 2 - t) / lam))

    def h1(self, x):
        """One-dimensional kernel; the x -> 0 limit is X + ramp."""
        x = np.asarray(x, dtype=float)
        a, lam = self.half_width, self.ramp
        out = np.empty_like(x)
        small = np.abs(x) < 1e-8
        xs = x[~small]
        out[~small] = np.sin(2 * math.pi * a * xs) * np.sin(math.pi * lam * xs) / (lam * math.pi ** 2 * xs ** 2)
        out[small] = 2 * a
        return out

    @property
    def transform_matrix(self) -> np.ndarray:
        """L = M^t I with M the real embedding matrix and I the trace form."""
        F = self.field
        return F.real_embedding_matrix.T @ F.trace_form

    def __call__(self, x) -> np.ndarray:
        """h_X at real coordinate rows of F_inf (shape (..., N))."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        L = self.transform_matrix
        u = x @ L.T
        return abs(np.linalg.det(L)) * np.prod(self.h1(u), axis=-1)

    def dual(self, coords) -> Fraction:
        """int h_X(x) e(Tr(x gamma)) dx for gamma with integer coordinates, exactly."""
        out = Fraction(1)
        for c in coords:
            out *= self.g_exact(int(c))
        return out


def hX_eval(kernel: SmoothingKernel, x) -> np.ndarray:
    return kernel(x)


@lru_cache(maxsize=8)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def ghat_numeric(kernel: SmoothingKernel, x: float, nodes: int = 4000) -> float:
    """Oracle for h1: Gauss-Legendre quadrature of int g(t) e(-x t) dt over the plateau and ramps."""
    X2, lam = kernel.X / 2, kernel.ramp
    total = 0.0
    for a, b in ((0.0, X2), (X2, X2 + lam)):
        t, w = _leggauss(nodes // 2)
        tt = 0.5 * (b - a) * t + 0.5 * (b + a)
        total += float(np.sum(w * 0.5 * (b - a) * kernel.g(tt) * np.cos(2 * math.pi * x * tt)))
    return 2 * total        # g is even, so the sine part vanishes


def _h1_l1(kernel: SmoothingKernel, cutoff: float | None = None, per_turn: int = 16) -> float:
    """int |h1| over the real line: panels between zeros up to a cutoff plus an averaged tail."""
    a, lam = kernel.half_width, kernel.ramp
    if cutoff is None:
        cutoff = 400.0 / lam
    # zeros of sin(2 pi a x) and sin(pi lam x) bound smooth panels
    z = np.union1d(np.arange(0, cutoff * 2 * a + 1) / (2 * a), np.arange(0, cutoff * lam + 1) / lam)
    z = z[z <= cutoff]
    t, w = _leggauss(per_turn)
    lo, hi = z[:-1, None], z[1:, None]
    xs = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    vals = np.abs(kernel.h1(xs.ravel())).reshape(xs.shape)
    body = float(np.sum(vals * w * 0.5 * (hi - lo)))
    # beyond the cutoff |sin sin| averages to 4/pi^2 (incommensurate) against 1/(lam pi^2 x^2)
    tail = 4 / math.pi ** 2 / (lam * math.pi ** 2 * cutoff)
    return 2 * (body + tail)


def hX_l1(kernel: SmoothingKernel) -> float:
    """L1 norm of h_X; the change of variables makes it the N-th power of the 1-D norm."""
    return _h1_l1(kernel) ** kernel.field.degree


@dataclass
class L1Growth:
    X: np.ndarray
    l1: np.ndarray
    ratio: np.ndarray             # l1 / (log X)^N

    @property
    def spread(self) -> float:
        return float(self.ratio.max() / self.ratio.min())


def l1_growth(X_grid, field_: NumberField | None = None, ramp: float = 1.0) -> L1Growth:
    F = field_ or load_field("Q")
    Xs = np.asarray(X_grid, dtype=float)
    l1 = np.array([hX_l1(SmoothingKernel(X, ramp, F)) for X in Xs])
    return L1Growth(Xs, l1, l1 / np.log(Xs) ** F.degree)


def dual_violations(kernel: SmoothingKernel, extent: float | None = None) -> int:
    """Lattice points with every coordinate at most `extent` where the dual property fails."""
    if extent is None:
        extent = 4 * kernel.X
    h = int(math.floor(extent))
    bad = 0
    N = kernel.field.degree
    axis = range(-h, h + 1)
    # the dual value factorises over coordinates, so check each coordinate value once
    per = {c: kernel.dual([c]) for c in axis}
    inside = {c: abs(c) <= kernel.X / 2 for c in axis}
    for c in axis:
        want = 1 if inside[c] else 0
        if per[c] != want:
            bad += (2 * h + 1) ** (N - 1)
    return bad


# -- sharp from smooth --------------------------------------------------------------------------------


def annulus_comparison(provider: CoefficientProvider, theta: float, T: float, weight: WeightSpec) -> dict:
    """Sharp sum over T <= |n| <= width*T against the smooth sum with `weight` (Q only).

    The two agree exactly when the weight is 1 at every lattice point of the annulus and
    0 at every lattice point outside it; the difference is reported rather than assumed.
    """
    a, b = weight.support
    n = np.arange(1, int(math.floor(b)) + 1)
    A = provider.values_by_norm(n)
    n_all = np.concatenate([n, -n])
    A_all = np.concatenate([A, A])
    chi = np.exp(2j * math.pi * theta * n_all)
    inside = (np.abs(n_all) >= a) & (np.abs(n_all) <= b)
    sharp = pairwise_sum(A_all * chi * inside)
    w = weight(n_all.astype(float)) if weight.sides == "both" else WeightSpec(
        weight.T, weight.width, weight.plateau, sides="both", amplitude=weight.amplitude)(n_all.astype(float))
    smooth = pairwise_sum(A_all * chi * w)
    mismatch = int(np.sum(np.abs(w - inside) > 1e-15))
    return {"sharp": sharp, "smooth": smooth, "difference": abs(sharp - smooth), "mismatched_points": mismatch}


# -- proof pipeline -------------------------------------------------------------------------------------


@dataclass
class PipelineReport:
    theta: float
    T: float
    Q: float
    alpha: int
    beta: int
    rho: float
    lhs: complex
    rhs: complex
    dominant: float
    tails: float
    dominant_terms: int
    total_terms: int
    scaled_dominant: float
    divisor_blocks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["lhs"] = [self.lhs.real, self.lhs.imag]
        d["rhs"] = [self.rhs.real, self.rhs.imag]
        return d


def pipeline_bound_check(provider: CoefficientProvider, theta: float, T: float, C: float = 4.0,
                         tol: float = 1e-3, width: float = 2.0) -> PipelineReport:
    """Dirichlet approximation at Q = sqrt(T), then the dual side of the smoothed sum on [T, width*T].

    Writing theta = alpha/beta - rho, the smooth sum is the Voronoi left side with f = w e(-rho x).
    Dual terms with T|y| <= (C sqrt(T)/beta)^r form the dominant block.
    """
    F = provider.field
    if F.degree != 1:
        raise ValueError("the pipeline is implemented over Q")
    Q = math.sqrt(T)
    approx = dirichlet_approx(F, [theta], Q)
    alpha = int(approx.alpha.coords[0])
    beta = int(approx.beta.coords[0])
    if beta < 0:
        alpha, beta = -alpha, -beta
    rho = alpha / beta - theta
    inst = VoronoiInstance.rational(provider.rank, alpha, beta, T, rho, width=width, provider=provider,
                                    tol=tol)
    lhs = lhs_sum(inst)
    total, dual, terms = _dual_terms(inst)
    r = provider.rank
    y_dom = (C * math.sqrt(T) / inst.b_norm) ** r / T
    dom_mask = np.abs(dual[:, 0]) <= y_dom
    dom = float(abs(np.sum(terms[dom_mask])))
    tails = float(np.sum(np.abs(terms[~dom_mask])))
    scale = T ** (r / 4)
    return PipelineReport(theta, T, Q, int(inst.alpha.coords[0]), inst.b_norm, rho, lhs, total.value, dom,
                          tails, int(dom_mask.sum()), len(terms), dom / scale, total.blocks)


def _dual_terms(inst: VoronoiInstance) -> tuple[DualSum, np.ndarray, np.ndarray]:
    """The dual sum, then its y values and summands out to the truncation radius."""
    total = rhs_sum(inst)
    b = inst.b_norm
    abar = int(inst.alpha_bar.coords[0]) if b > 1 else 0
    prov = inst.provider.dual()
    r = inst.rank
    den = b ** r
    tr = _rational_transform(inst, 1 / den)
    ys, ts = [], []
    for g in (divisors(b) if r == 3 else [1]):
        n_max = int(math.ceil(total.radius * den / (g * g))) + 1
        n = np.arange(1, n_max)
        for s in (1, -1):
            m = s * n
            if r == 2:
                t = prov.values_by_norm(n) * np.exp(-2j * math.pi * ((s * abar * n) % b) / b) * tr(m, den) / b
            else:
                row = kloosterman_row(b // g)
                t = (g / b ** 2) * prov.pair_values(g, n) * row[(s * abar * n) % (b // g)] * tr(m * g * g, den)
            ys.append(m * g * g / den)
            ts.append(t)
    return total, np.concatenate(ys)[:, None], np.concatenate(ts)
