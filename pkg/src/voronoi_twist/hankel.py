"""Hankel transforms f~(y) = int J(xy) f(x) dx of smooth compactly supported weights.

Real places have two routes:

* ``direct``: x-space Gauss-Legendre panels.  The node count is 8 per phase turn
  of kernel times modulation, plus a base.  Used when the kernel has a cheap
  closed form (rank-2 discrete series).
* ``mellin``: swap the Mellin-Barnes integral with the x-integral.  This gives
  f~(y) = (1/2 pi) int G_sign(s) M(s) |y|^(-s) dt on Re s = sigma, where
  M(s) = int f(x) x^(-s) dx.  M is computed once, so each extra y costs a single
  sum over the t-nodes.  This works for any gamma factor.

Complex places expand the kernel in angular modes.  Each mode pairs the
radial kernel with the matching angular Fourier coefficient of f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bessel import (BesselParamsComplex, BesselParamsReal, Contour, _meijer_complex_mp,
                     evaluate_real, j_complex)

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (10, 20)}
NODES_PER_TURN = 8
BASE_NODES = 200


# -- weights ------------------------------------------------------------------------


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    a, b = _psi(t), _psi(1 - t)
    return a / (a + b)


def bump(u, plateau: float = 1 / 3):
    """Smooth bump supported on [0, 1], equal to 1 on the central plateau fraction."""
    u = np.asarray(u, dtype=float)
    ramp = (1 - plateau) / 2
    return smooth_step(u / ramp) * smooth_step((1 - u) / ramp)


@dataclass(frozen=True)
class WeightSpec:
    """Bump in |x| on [T, width*T].  ``sides`` selects x > 0, x < 0 or both (real places)."""

    T: float
    width: float = 2.0
    plateau: float = 1 / 3
    place: str = "real"
    sides: str = "positive"
    amplitude: float = 1.0
    angular: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.T <= 0 or self.width <= 1:
            raise ValueError("need T > 0 and width > 1")
        if self.place not in ("real", "complex"):
            raise ValueError("place must be 'real' or 'complex'")
        if self.sides not in ("positive", "negative", "both"):
            raise ValueError("sides must be positive, negative or both")

    @property
    def support(self) -> tuple[float, float]:
        return (self.T, self.width * self.T)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.support
        return self.amplitude * bump((r - a) / (b - a), self.plateau)

    def __call__(self, x):
        if self.place == "complex":
            z = np.asarray(x, dtype=complex)
            out = self.radial(np.abs(z)).astype(complex)
            if self.angular is not None:
                out = out * self.angular(np.angle(z))
            return out
        x = np.asarray(x, dtype=float)
        out = self.radial(np.abs(x))
        if self.sides == "positive":
            out = np.where(x > 0, out, 0.0)
        elif self.sides == "negative":
            out = np.where(x < 0, out, 0.0)
        return out

    @property
    def signs(self) -> tuple[int, ...]:
        return {"positive": (1,), "negative": (-1,), "both": (1, -1)}[self.sides]


@dataclass(frozen=True)
class TestFunction:
    """f(x) = w(x) e(-rho x) (real) or w(z) e(-rho z - conj(rho z)) (complex)."""

    weight: WeightSpec
    rho: complex = 0.0

    __test__ = False  # not a pytest class

    def __call__(self, x):
        w = self.weight(x)
        if self.weight.place == "complex":
            z = np.asarray(x, dtype=complex)
            return w * np.exp(-2j * math.pi * 2 * (complex(self.rho) * z).real)
        return w * np.exp(-2j * math.pi * float(np.real(self.rho)) * np.asarray(x, dtype=float))

    @property
    def is_zero(self) -> bool:
        return self.weight.amplitude == 0


# -- helpers --------------------------------------------------------------------------


def gl_nodes(a: float, b: float, n_nodes: int, order: int = 20):
    """Composite Gauss-Legendre with at least n_nodes nodes on [a, b]."""
    xg, wg = _GL[order]
    panels = max(1, math.ceil(n_nodes / order))
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * xg).ravel(), (half * wg).ravel()


def kernel_turns(rank: int, y: float, a: float, b: float) -> float:
    """Phase turns of e(r (xy)^(1/r)) for x from a to b."""
    y = abs(y)
    return rank * y ** (1 / rank) * (b ** (1 / rank) - a ** (1 / rank))


def _kernel_callable(params: BesselParamsReal | Callable) -> tuple[Callable, int]:
    if callable(params) and not isinstance(params, BesselParamsReal):
        return params, getattr(params, "rank", 2)
    p = params
    method = "closed" if p.is_discrete_gl2 else "auto"
    return (lambda x: evaluate_real(p, x, method=method).value), p.rank


# -- real place: direct route ---------------------------------------------------------


@dataclass
class HankelEval:
    value: np.ndarray
    err: np.ndarray
    method: str


def hankel_direct(kernel, f: TestFunction, y, c: float = NODES_PER_TURN, base: int = BASE_NODES,
                  block: int = 64) -> np.ndarray:
    """x-space quadrature of int J(xy) f(x) dx for each y; kernel is params or a callable."""
    kfun, rank = _kernel_callable(kernel)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros(y.shape, dtype=complex)
    if f.is_zero:
        return out
    a, b = f.weight.support
    rho_turns = abs(float(np.real(f.rho))) * (b - a)
    order = np.argsort(np.abs(y))
    for sgn in f.weight.signs:
        for start in range(0, len(order), block):
            idx = order[start:start + block]
            turns = kernel_turns(rank, float(np.max(np.abs(y[idx]))), a, b) + rho_turns
            xs, ws = gl_nodes(a, b, int(math.ceil(c * turns)) + base)
            xs = sgn * xs
            fx = f(xs) * ws
            kx = kfun(np.outer(y[idx], xs).ravel()).reshape(len(idx), len(xs))
            out[idx] += kx @ fx
    return out


# -- real place: Mellin route ----------------------------------------------------------


def _gamma_on_line(params: BesselParamsReal, s: np.ndarray):
    g0 = np.exp(params.log_gamma(s))
    g1 = np.exp(params.flipped().log_gamma(s))
    return 0.5 * (g0 + g1), 0.5 * (g0 - g1)


@dataclass
class MellinHankel:
    """Precomputed Mellin data of one test function against one kernel."""

    params: BesselParamsReal
    f: TestFunction
    tol: float = 1e-10
    sigma: float | None = None
    t_max: float | None = None
    y_range: tuple[float, float] = (1e-3, 1e5)
    nodes_per_cycle: float = 8.0

    def __post_init__(self):
        p = self.params
        if self.sigma is None:
            self.sigma = max(0.5, p.rightmost_pole() + 0.5)
        a, b = self.f.weight.support
        self._xa, self._xb = a, b
        if self.t_max is None:
            self.t_max = self._find_t_max()
        # phase rate of the t-integrand bounds the node spacing
        ylo, yhi = self.y_range
        rate = (max(p.rank * math.log(1 + self.t_max / (2 * math.pi)) + abs(math.log(ylo * a)),
                    abs(math.log(yhi * b))) + 2.0) / (2 * math.pi)
        n_t = int(math.ceil(2 * self.t_max * rate * self.nodes_per_cycle)) + 40
        t, wt = gl_nodes(-self.t_max, self.t_max, n_t)
        s = self.sigma + 1j * t
        gp, gm = _gamma_on_line(p, s)
        m = {sg: self._mellin(s, sg) for sg in self.f.weight.signs}
        zero = np.zeros_like(s)
        mp_, mm_ = m.get(1, zero), m.get(-1, zero)
        self._s = s
        self._a_pos = wt * (gp * mp_ + gm * mm_) / (2 * math.pi)
        self._a_neg = wt * (gm * mp_ + gp * mm_) / (2 * math.pi)

    def _x_nodes(self, t_max: float):
        a, b = self._xa, self._xb
        turns = t_max * math.log(b / a) / (2 * math.pi) + abs(float(np.real(self.f.rho))) * (b - a)
        return gl_nodes(a, b, int(math.ceil(NODES_PER_TURN * turns)) + BASE_NODES)

    def _mellin(self, s: np.ndarray, sign: int, x_nodes=None) -> np.ndarray:
        """M(s) = int_0^inf f(sign * x) x^(-s) dx at each node s."""
        xs, ws = x_nodes if x_nodes is not None else self._x_nodes(float(np.max(np.abs(s.imag))))
        fx = self.f(sign * xs) * ws
        lx = np.log(xs)
        out = np.empty(s.shape, dtype=complex)
        step = max(1, 2_000_000 // len(xs))
        for i in range(0, len(s), step):
            out[i:i + step] = np.exp(-np.outer(s[i:i + step], lx)) @ fx
        return out

    def _find_t_max(self) -> float:
        """Geometric probe for the t beyond which |M| stays below tol relative to |M(sigma)|."""
        def mag(t):
            ts = np.array([t, 1.01 * t, 1.02 * t])
            best = 0.0
            for sg in self.f.weight.signs:
                for direction in (1, -1):
                    s = self.sigma + 1j * direction * ts
                    best = max(best, float(np.max(np.abs(self._mellin(s, sg)))))
            return best

        peak = max(mag(0.0), mag(5.0))
        if peak == 0:
            return 1.0
        t, below = 20.0, 0
        while t < 50000.0:
            if mag(t) < self.tol * peak:
                below += 1
                if below == 2:
                    return t
            else:
                below = 0
            t *= 1.25
        return t

    def __call__(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(y.shape, dtype=complex)
        ly = np.log(np.abs(y))
        step = max(1, 4_000_000 // len(self._s))
        for coef, mask in ((self._a_pos, y > 0), (self._a_neg, y < 0)):
            idx = np.nonzero(mask)[0]
            for i in range(0, len(idx), step):
                j = idx[i:i + step]
                out[j] = np.exp(-np.outer(ly[j], self._s)) @ coef
        return out

    @property
    def n_nodes(self) -> int:
        return len(self._s)


class InterpolatedHankel:
    """Piecewise Chebyshev interpolant of f~ in u = |y|^(1/r), built lazily per sign.

    f~(y) oscillates like e(r (x y)^(1/r)) with x <= width*T, i.e. at most
    r (width*T)^(1/r) turns per unit of u.  Each panel spans `turns` of those and
    carries `order` Chebyshev points evaluated exactly (by `exact`).
    """

    def __init__(self, exact: Callable, rank: int, x_max: float, u_min: float,
                 order: int = 24, turns: float = 1.0):
        self.exact, self.rank = exact, rank
        self.h = turns / (rank * x_max ** (1 / rank))
        self.u0 = u_min
        self.order = order
        k = np.arange(order)
        self._nodes = np.cos(np.pi * k / (order - 1))[::-1]        # Chebyshev points, 2nd kind
        w = (-1.0) ** k
        w[0] *= 0.5
        w[-1] *= 0.5
        self._w = w[::-1] * (-1) ** (order - 1)
        self._panels: dict[tuple[int, int], np.ndarray] = {}
        self.exact_calls = 0

    def _ensure(self, sign: int, idx: np.ndarray):
        need = [int(i) for i in np.unique(idx) if (sign, int(i)) not in self._panels]
        if not need:
            return
        u = np.concatenate([self.u0 + self.h * (i + 0.5 * (self._nodes + 1)) for i in need])
        vals = self.exact(sign * u ** self.rank)
        self.exact_calls += len(u)
        for j, i in enumerate(need):
            self._panels[(sign, i)] = vals[j * self.order:(j + 1) * self.order]

    def __call__(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(y.shape, dtype=complex)
        u = np.abs(y) ** (1 / self.rank)
        if np.any(u < self.u0 - 1e-12):
            raise ValueError("y below the interpolation range")
        idx = np.floor((u - self.u0) / self.h).astype(np.int64)
        for sign in (1, -1):
            m = np.sign(y) == sign
            if not m.any():
                continue
            self._ensure(sign, idx[m])
            for i in np.unique(idx[m]):
                sel = np.nonzero(m & (idx == i))[0]
                t = 2 * (u[sel] - self.u0 - self.h * i) / self.h - 1
                out[sel] = _barycentric(self._nodes, self._w, self._panels[(sign, int(i))], t)
        return out

    def sample_error(self, n: int = 32, seed: int = 0) -> float:
        """Max |interpolant - exact| at random points inside the panels built so far."""
        if not self._panels:
            return 0.0
        rng = np.random.default_rng(seed)
        keys = list(self._panels)
        pick = [keys[i] for i in rng.integers(0, len(keys), n)]
        u = np.array([self.u0 + self.h * (i + rng.uniform(0.05, 0.95)) for _, i in pick])
        y = np.array([sg for sg, _ in pick]) * u ** self.rank
        return float(np.max(np.abs(self(y) - self.exact(y))))


def _barycentric(nodes, w, vals, t):
    d = t[:, None] - nodes[None, :]
    hit = np.isclose(d, 0.0, atol=1e-15)
    d[hit] = 1.0
    c = w[None, :] / d
    out = (c @ vals) / c.sum(axis=1)
    rows, cols = np.nonzero(hit)
    out[rows] = vals[cols]
    return out


def hankel_real(params: BesselParamsReal, f: TestFunction, y, tol: float = 1e-8,
                method: str = "auto", estimate_error: bool = True) -> HankelEval:
    """f~(y) at nonzero real y; the error estimate compares against a refined evaluation."""
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(ya == 0):
        raise ValueError("y must be nonzero")
    if f.is_zero:
        return HankelEval(np.zeros(ya.shape, dtype=complex), np.zeros(ya.shape), "zero")
    if method == "auto":
        method = "direct" if params.is_discrete_gl2 else "mellin"
    if method == "direct":
        v = hankel_direct(params, f, ya)
        if not estimate_error:
            return HankelEval(v, np.full(ya.shape, np.nan), method)
        v2 = hankel_direct(params, f, ya, c=2 * NODES_PER_TURN, base=2 * BASE_NODES)
        return HankelEval(v2, np.abs(v2 - v), method)
    if method == "mellin":
        yr = (float(np.min(np.abs(ya))), float(np.max(np.abs(ya))))
        mh = MellinHankel(params, f, tol=tol, y_range=yr)
        v = mh(ya)
        if not estimate_error:
            return HankelEval(v, np.full(ya.shape, np.nan), method)
        mh2 = MellinHankel(params, f, tol=tol * 1e-2, y_range=yr, nodes_per_cycle=20.0)
        v2 = mh2(ya)
        return HankelEval(v2, np.abs(v2 - v), method)
    raise ValueError(f"unknown method {method!r}")


# -- complex place ----------------------------------------------------------------------


def _radial_modes(params: BesselParamsComplex | None, k: int, x: np.ndarray, method: str, dps: int):
    """j_(mu, m + k e)(x) for the radial arguments x."""
    if params is None:
        from scipy.special import jv
        return 2 * math.pi * (1j ** abs(k)) * jv(abs(k), 4 * math.pi * x)
    mvec = params.shifted(k)
    if method == "meijerg":
        return np.array([complex(_meijer_complex_mp(params, mvec, v, dps)) for v in x])
    c = Contour.for_poles(params.rightmost_pole(mvec), params.max_imag(),
                          extra_length=2.0 * max(abs(m) for m in mvec))
    return j_complex(params, mvec, x, c)[0]


def hankel_complex(params: BesselParamsComplex | None, f: TestFunction, u, tol: float = 1e-8,
                   n_radial: int | None = None, n_angular: int | None = None,
                   k_max: int | None = None, method: str = "contour", dps: int = 20) -> np.ndarray:
    """f~(u) = int_C J(zu) f(z) (2 dx dy) for each complex u.

    ``params=None`` selects the rank-one kernel e(Tr z) = e(2 Re z), whose angular
    modes are 2 pi i^|k| J_|k|(4 pi x).
    """
    ua = np.atleast_1d(np.asarray(u, dtype=complex))
    out = np.zeros(ua.shape, dtype=complex)
    if f.is_zero:
        return out
    if f.weight.place != "complex":
        raise ValueError("hankel_complex needs a complex-place weight")
    a, b = f.weight.support
    umax = float(np.max(np.abs(ua)))
    osc = 2 * b * (umax * (params.rank if params else 1) + 2 * abs(complex(f.rho)))
    if k_max is None:
        k_max = int(math.ceil(2 * math.pi * osc)) + 20 + (max(abs(m) for m in params.m) if params else 0)
    if n_angular is None:
        n_angular = 2 * k_max + 64
    if n_radial is None:
        n_radial = int(NODES_PER_TURN * osc * 2) + 80
    r, wr = gl_nodes(a, b, n_radial)
    phi = 2 * math.pi * np.arange(n_angular) / n_angular
    fz = f(r[:, None] * np.exp(1j * phi)[None, :])
    coeff = np.fft.ifft(fz, axis=1)           # coeff[:, k] = (1/2pi) int f e^{ik phi} dphi
    for idx, uv in np.ndenumerate(ua):
        if uv == 0:
            raise ValueError("u must be nonzero")
        x = r * abs(uv)
        om = math.atan2(uv.imag, uv.real)
        total = 0j
        for k in range(-k_max, k_max + 1):
            ck = coeff[:, k % n_angular]
            if not np.any(np.abs(ck) > tol * 1e-3 * np.max(np.abs(coeff[:, 0]) + 1e-300)):
                continue
            jk = _radial_modes(params, k, x, method, dps)
            total += np.exp(1j * k * om) * np.sum(jk * ck * r * wr)
        out[idx] = 2 * total
    return out


# -- decay scans ------------------------------------------------------------------------


@dataclass
class DecayReport:
    T: float
    rho: float
    rank: int
    width: float
    y: np.ndarray
    values: np.ndarray
    labels: list[str]
    exponents: dict[str, float]
    window_sup: float | None
    outside_max: float | None

    def rows(self):
        for yv, v, lab in zip(self.y, self.values, self.labels):
            yield (float(yv), float(v.real), float(v.imag), float(abs(v)), lab)


def _regime_labels(T: float, rho: float, rank: int, width: float, y: np.ndarray) -> list[str]:
    ty = T * np.abs(y)
    out = []
    if rho != 0:
        c = (T * abs(rho)) ** rank
        lo, hi = c / width ** (rank * (rank - 1)), c * width ** (rank * (rank - 1))
    else:
        lo = hi = None
    for v in ty:
        if v <= 1:
            out.append("small")
        elif lo is not None and lo <= v <= hi:
            out.append("window")
        else:
            out.append("tail")
    return out


def fit_exponent(y: np.ndarray, v: np.ndarray, floor: float = 1e-13) -> float:
    """Slope of log|v| against log|y| (negated), ignoring values at the noise floor."""
    a = np.abs(v)
    keep = a > floor * max(a.max(), 1e-300)
    if keep.sum() < 3:
        return float("inf")
    slope = np.polyfit(np.log(np.abs(y[keep])), np.log(a[keep]), 1)[0]
    return float(-slope)


def decay_scan(params: BesselParamsReal, f: TestFunction, y_grid, method: str = "auto",
               tail_range: tuple[float, float] | None = None) -> DecayReport:
    """Evaluate f~ over the grid, label regimes and fit per-regime decay exponents."""
    y = np.asarray(y_grid, dtype=float)
    v = hankel_real(params, f, y, method=method, estimate_error=False).value
    T, width = f.weight.T, f.weight.width
    rho = float(np.real(f.rho))
    labels = _regime_labels(T, rho, params.rank, width, y)
    lab = np.array(labels)
    exps = {}
    for name in ("small", "window", "tail"):
        m = lab == name
        if m.sum() >= 3:
            exps[name] = fit_exponent(y[m], v[m])
    if tail_range is not None:
        lo, hi = tail_range
        m = (T * np.abs(y) >= lo) & (T * np.abs(y) <= hi)
        if m.sum() >= 3:
            exps["far_tail"] = fit_exponent(y[m], v[m])
    win = lab == "window"
    scaled = np.abs(v) * np.sqrt(np.abs(y) / T)
    window_sup = float(scaled[win].max()) if win.any() else None
    outside = (lab == "tail") & (T * np.abs(y) > 1)
    outside_max = float(scaled[outside].max()) if outside.any() else None
    return DecayReport(T, rho, params.rank, width, y, v, labels, exps, window_sup, outside_max)
