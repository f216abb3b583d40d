"""Archimedean Bessel kernels from Mellin-Barnes integrals of gamma factors.

Three evaluation routes, so that each can be checked against another:

* ``contour``: direct Gauss-Legendre quadrature along a left-opening path.  The
  path runs up the line Re s = sigma0 for |Im s| <= H, bends to Re s = sigma1,
  then leaves along rays heading up-left and down-left.  On those rays the
  gamma quotient decays superexponentially.  Accurate for moderate |x|.
* ``meijerg``: the same integral as a Meijer G-function, evaluated in mpmath.
  Use it for large |x| and for sign cancellations that need extra digits.
* ``closed``: rank-2 discrete series, where the kernel is a classical J-Bessel function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma as sp_gamma
from scipy.special import jv, loggamma, rgamma

LOG_PI = math.log(math.pi)
LOG_2PI = math.log(2 * math.pi)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


class PoleError(ValueError):
    pass


class ToleranceError(RuntimeError):
    pass


# -- gamma factors ----------------------------------------------------------------


def log_gamma_factor_real(s, delta: int) -> np.ndarray:
    """log G_delta(s) from the quotient form i^d pi^(1/2-s) Gamma((s+d)/2) / Gamma((1-s+d)/2)."""
    s = np.asarray(s, dtype=complex)
    return (1j * math.pi / 2 * delta + (0.5 - s) * LOG_PI
            + loggamma((s + delta) / 2) - loggamma((1 - s + delta) / 2))


def gamma_factor_real(s, delta: int):
    """G_delta(s); raises PoleError within 1e-8 of a pole at s = -delta - 2k."""
    if delta not in (0, 1):
        raise ValueError("delta must be 0 or 1")
    sa = np.asarray(s, dtype=complex)
    # poles of Gamma((s+d)/2): (s+d)/2 = -k
    half = (sa + delta) / 2
    dist = 2 * np.abs(half - np.minimum(np.rint(half.real), 0))
    if np.any((half.real < 0.5) & (dist < 1e-8)):
        raise PoleError(f"s={s} is a pole of the delta={delta} gamma factor")
    # zeros of 1/Gamma((1-s+d)/2) give exact zeros; handle via reciprocal gamma
    num = np.exp(1j * math.pi / 2 * delta + (0.5 - sa) * LOG_PI + loggamma(half))
    out = num * rgamma((1 - sa + delta) / 2)
    return out if np.ndim(s) else complex(out)


def gamma_factor_real_closed(s, delta: int):
    """2(2pi)^-s Gamma(s) cos(pi s/2) for delta = 0; 2i(2pi)^-s Gamma(s) sin(pi s/2) for delta = 1."""
    s = np.asarray(s, dtype=complex)
    trig = np.cos(np.pi * s / 2) if delta == 0 else 1j * np.sin(np.pi * s / 2)
    return 2 * (2 * np.pi) ** (-s) * sp_gamma(s) * trig


def log_gamma_factor_complex(s, m: int) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    a = abs(int(m)) / 2
    return (1j * math.pi / 2 * abs(int(m)) + (1 - 2 * s) * LOG_2PI
            + loggamma(s + a) - loggamma(1 - s + a))


def gamma_factor_complex(s, m: int):
    """i^|m| (2pi)^(1-2s) Gamma(s + |m|/2) / Gamma(1 - s + |m|/2)."""
    sa = np.asarray(s, dtype=complex)
    a = abs(int(m)) / 2
    z = sa + a
    if np.any((z.real < 0.5) & (np.abs(z - np.minimum(np.rint(z.real), 0)) < 1e-8)):
        raise PoleError(f"s={s} is a pole of the m={m} gamma factor")
    out = np.exp(1j * math.pi / 2 * abs(int(m)) + (1 - 2 * sa) * LOG_2PI + loggamma(z)) * rgamma(1 - sa + a)
    return out if np.ndim(s) else complex(out)


# -- parameters ---------------------------------------------------------------------


@dataclass(frozen=True)
class DiscretePair:
    i: int
    j: int
    weight: int        # m = mu_i - mu_j
    center: complex    # (mu_i + mu_j) / 2


@dataclass(frozen=True)
class BesselParamsReal:
    mu: tuple
    delta: tuple

    def __post_init__(self):
        mu = tuple(complex(m) for m in self.mu)
        delta = tuple(int(d) % 2 for d in self.delta)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "delta", delta)
        if len(mu) != len(delta) or not 1 <= len(mu) <= 3:
            raise ValueError("mu and delta must have the same length, between 1 and 3")
        if abs(sum(mu)) > 1e-12:
            raise ValueError("mu must sum to zero")
        paired = {k for p in self.pairs for k in (p.i, p.j)}
        for l, m in enumerate(mu):
            if l not in paired and abs(m.real) >= 0.5:
                raise ValueError(f"mu_{l} = {m} is neither principal series nor part of a discrete pair")

    @property
    def rank(self) -> int:
        return len(self.mu)

    @cached_property
    def pairs(self) -> tuple[DiscretePair, ...]:
        """Index pairs whose gamma factors merge into one discrete-series quotient."""
        out, used = [], set()
        mu, delta = self.mu, self.delta
        for i in range(len(mu)):
            for j in range(len(mu)):
                if i == j or i in used or j in used:
                    continue
                d = mu[i] - mu[j]
                if abs(d.imag) < 1e-12 and d.real > 0.5 and abs(d.real - round(d.real)) < 1e-12:
                    m = int(round(d.real))
                    if (delta[i] + delta[j]) % 2 == (m + 1) % 2:
                        out.append(DiscretePair(i, j, m, (mu[i] + mu[j]) / 2))
                        used |= {i, j}
        return tuple(out)

    def flipped(self) -> "BesselParamsReal":
        return BesselParamsReal(self.mu, tuple(1 - d for d in self.delta))

    @property
    def singles(self) -> list[int]:
        paired = {k for p in self.pairs for k in (p.i, p.j)}
        return [l for l in range(self.rank) if l not in paired]

    def rightmost_pole(self) -> float:
        cands = [self.mu[l].real - self.delta[l] for l in self.singles]
        cands += [p.center.real - p.weight / 2 for p in self.pairs]
        return max(cands)

    def max_imag(self) -> float:
        return max(abs(m.imag) for m in self.mu)

    def log_gamma(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for p in self.pairs:
            u = s - p.center
            out = out + (1j * math.pi / 2 * (p.weight + 1) + (1 - 2 * u) * LOG_2PI
                         + loggamma(u + p.weight / 2) - loggamma(1 - u + p.weight / 2))
        for l in self.singles:
            out = out + log_gamma_factor_real(s - self.mu[l], self.delta[l])
        return out

    def gamma(self, s):
        """The full factor as a plain product of single-place factors (no pairing)."""
        out = 1.0 + 0j
        for m, d in zip(self.mu, self.delta):
            out = out * gamma_factor_real(np.asarray(s) - m, d)
        return out

    @property
    def is_discrete_gl2(self) -> bool:
        return self.rank == 2 and len(self.pairs) == 1 and abs(self.pairs[0].center) < 1e-12

    @classmethod
    def delta_form(cls, weight: int = 12) -> "BesselParamsReal":
        m = weight - 1
        return cls((m / 2, -m / 2), (0, 0) if m % 2 else (0, 1))

    @classmethod
    def sym2_delta(cls, weight: int = 12, middle: int = 1) -> "BesselParamsReal":
        m = weight - 1
        return cls((m, 0, -m), (0, middle, 1))

    @classmethod
    def additive_character(cls) -> "BesselParamsReal":
        return cls((0,), (0,))


@dataclass(frozen=True)
class BesselParamsComplex:
    mu: tuple
    m: tuple
    M_max: int | None = None

    def __post_init__(self):
        mu = tuple(complex(v) for v in self.mu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if len(mu) != len(self.m) or not 1 <= len(mu) <= 3:
            raise ValueError("mu and m must have the same length, between 1 and 3")
        if abs(sum(mu)) > 1e-12:
            raise ValueError("mu must sum to zero")
        if any(abs(v.real) >= 0.5 for v in mu):
            raise ValueError("complex places need |Re mu_l| < 1/2")

    @property
    def rank(self) -> int:
        return len(self.mu)

    @property
    def truncation(self) -> int:
        return self.M_max if self.M_max is not None else max(abs(v) for v in self.m) + 40

    def shifted(self, k: int) -> tuple[int, ...]:
        return tuple(v + k for v in self.m)

    def log_gamma(self, s, mvec: Sequence[int]) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for mu, m in zip(self.mu, mvec):
            out = out + log_gamma_factor_complex(s - mu, m)
        return out

    def rightmost_pole(self, mvec: Sequence[int]) -> float:
        return max(mu.real - abs(m) / 2 for mu, m in zip(self.mu, mvec))

    def max_imag(self) -> float:
        return max(abs(v.imag) for v in self.mu)


# -- contour ------------------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    sigma0: float = 0.5
    sigma1: float = -1.0
    H: float = 2.0
    angle: float = 0.75 * math.pi
    length: float = 60.0
    panel: float = 0.25

    def _segment(self, a: complex, b: complex) -> tuple[np.ndarray, np.ndarray]:
        n = max(1, int(math.ceil(abs(b - a) / self.panel)))
        edges = np.linspace(0.0, 1.0, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        u = (mid + half * _GL_X[None, :]).ravel()
        w = (half * _GL_W[None, :]).ravel() * (b - a)
        return a + (b - a) * u, w

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(s, ds, is_tail): nodes, complex weights including ds, and a flag for the last panels."""
        p1 = complex(self.sigma0, self.H)
        p2 = complex(self.sigma1, self.H + (self.sigma0 - self.sigma1))
        p3 = p2 + self.length * complex(math.cos(self.angle), math.sin(self.angle))
        q1, q2, q3 = p1.conjugate(), p2.conjugate(), p3.conjugate()
        segs = [(q3, q2), (q2, q1), (q1, p1), (p1, p2), (p2, p3)]
        s_parts, w_parts = zip(*(self._segment(a, b) for a, b in segs))
        s = np.concatenate(s_parts)
        w = np.concatenate(w_parts)
        tail = np.zeros(s.size, dtype=bool)
        k = len(_GL_X)
        tail[:k] = True
        tail[-k:] = True
        return s, w, tail

    @classmethod
    def for_poles(cls, rightmost: float, max_imag: float, sigma1: float = -1.0,
                  angle: float = 0.75 * math.pi, length: float | None = None,
                  extra_length: float = 0.0) -> "Contour":
        sigma0 = max(0.5, rightmost + 0.5)
        sigma1 = min(sigma1, sigma0 - 0.5)
        L = length if length is not None else 60.0 + extra_length
        return cls(sigma0=sigma0, sigma1=sigma1, H=2.0 + max_imag, angle=angle, length=L)


def _mb_integral(log_g, x: np.ndarray, contour: Contour, power: float = 1.0):
    """(1/2 pi i) int G(s) x^(-power*s) ds for each x > 0, with error estimate."""
    s, w, tail = contour.nodes
    lg = log_g(s)
    lx = np.log(np.asarray(x, dtype=float))
    out = np.empty(lx.shape, dtype=complex)
    err = np.empty(lx.shape)
    for idx, l in np.ndenumerate(lx):
        terms = w * np.exp(lg - power * s * l)
        out[idx] = terms.sum() / (2j * math.pi)
        mag = np.abs(terms)
        err[idx] = (1e-15 * mag.sum() * 8 + mag[tail].sum()) / (2 * math.pi)
    return out, err


# -- Meijer G route --------------------------------------------------------------------


def _meijer_real_mp(params: BesselParamsReal, x: float, dps: int):
    r = params.rank
    with mp.workdps(dps):
        b = [(d - mp.mpc(m)) / 2 for m, d in zip(params.mu, params.delta)]
        bp = [(1 - d - mp.mpc(m)) / 2 for m, d in zip(params.mu, params.delta)]
        z = mp.pi ** (2 * r) * mp.mpf(x) ** 2
        return 2 * mp.mpc(0, 1) ** sum(params.delta) * mp.pi ** (mp.mpf(r) / 2) * mp.meijerg([[], []], [b, bp], z)


def _meijer_complex_mp(params: BesselParamsComplex, mvec: Sequence[int], x: float, dps: int):
    r = params.rank
    with mp.workdps(dps):
        b = [mp.mpf(abs(m)) / 2 - mp.mpc(mu) for mu, m in zip(params.mu, mvec)]
        bp = [-mp.mpc(mu) - mp.mpf(abs(m)) / 2 for mu, m in zip(params.mu, mvec)]
        z = (2 * mp.pi) ** (2 * r) * mp.mpf(x) ** 2
        return mp.mpc(0, 1) ** sum(abs(m) for m in mvec) * (2 * mp.pi) ** r * mp.meijerg([[], []], [b, bp], z)


# -- kernels --------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelEval:
    value: np.ndarray
    err: np.ndarray
    method: str


def j_real(params: BesselParamsReal, x, contour: Contour | None = None):
    """j_(mu, delta)(x) for x > 0 on the contour route: (values, error estimates)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("j is defined for x > 0")
    c = contour or Contour.for_poles(params.rightmost_pole(), params.max_imag())
    return _mb_integral(params.log_gamma, x, c)


def _kernel_real_contour(params, x, contour):
    ax = np.abs(x)
    j0, e0 = j_real(params, ax, contour)
    j1, e1 = j_real(params.flipped(), ax, contour)
    sign = np.sign(x)
    return 0.5 * (j0 + sign * j1), 0.5 * (e0 + e1)


def _kernel_real_meijer(params, x, dps):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=complex)
    flip = params.flipped()
    for idx, v in np.ndenumerate(x):
        a = _meijer_real_mp(params, abs(v), dps)
        b = _meijer_real_mp(flip, abs(v), dps)
        with mp.workdps(dps):
            out[idx] = complex((a + b) / 2 if v > 0 else (a - b) / 2)
    return out, np.full(x.shape, 10.0 ** (-min(dps, 30) + 3) * np.maximum(1, np.abs(out)))


def _kernel_real_closed(params, x):
    p = params.pairs[0]
    x = np.asarray(x, dtype=float)
    val = 2 * math.pi * (1j ** (p.weight + 1)) * jv(p.weight, 4 * math.pi * np.sqrt(np.abs(x)))
    return np.where(x > 0, val, 0.0 + 0j), np.full(x.shape, 1e-15) * np.maximum(1, np.abs(val))


def evaluate_real(params: BesselParamsReal, x, tol: float = 1e-10, method: str = "auto",
                  contour: Contour | None = None, dps: int = 30) -> KernelEval:
    """J_(mu, delta)(x) for real nonzero x, with an error estimate and the route used."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa == 0):
        raise ValueError("the kernel is evaluated at nonzero arguments only")
    if method == "closed" or (method == "auto" and params.is_discrete_gl2):
        if not params.is_discrete_gl2:
            raise ValueError("closed form exists only for rank-2 discrete series")
        v, e = _kernel_real_closed(params, xa)
        return KernelEval(v, e, "closed")
    if method in ("contour", "auto"):
        v, e = _kernel_real_contour(params, xa, contour)
        if method == "contour" or np.all(e <= tol):
            return KernelEval(v, e, "contour")
        bad = e > tol
        mv, me = _kernel_real_meijer(params, xa[bad], dps)
        v = v.copy()
        e = e.copy()
        v[bad], e[bad] = mv, me
        return KernelEval(v, e, "mixed")
    if method == "meijerg":
        v, e = _kernel_real_meijer(params, xa, dps)
        return KernelEval(v, e, "meijerg")
    raise ValueError(f"unknown method {method!r}")


def bessel_kernel_real(params: BesselParamsReal, x, tol: float = 1e-10, **kw):
    ev = evaluate_real(params, x, tol, **kw)
    if np.any(ev.err > tol):
        raise ToleranceError(f"kernel error estimate {ev.err.max():.2e} exceeds tol {tol:.1e}")
    return ev.value if np.ndim(x) else complex(ev.value[0])


def j_complex(params: BesselParamsComplex, mvec: Sequence[int], x, contour: Contour | None = None):
    x = np.asarray(x, dtype=float)
    c = contour or Contour.for_poles(params.rightmost_pole(mvec), params.max_imag(),
                                     extra_length=2.0 * max(abs(m) for m in mvec))
    return _mb_integral(lambda s: params.log_gamma(s, mvec), x, c, power=2.0)


def evaluate_complex(params: BesselParamsComplex, z, tol: float = 1e-10, method: str = "contour",
                     dps: int = 30, sigma1: float = -1.0) -> KernelEval:
    """J_(mu, m)(z) from its angular Fourier series.

    With ``params.M_max`` unset the series stops once two consecutive orders fall
    below tol/100; otherwise exactly the orders |k| <= M_max are summed.
    """
    za = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(za == 0):
        raise ValueError("the kernel is evaluated at nonzero arguments only")
    r, phi = np.abs(za), np.angle(za)
    total = np.zeros(za.shape, dtype=complex)
    err = np.zeros(za.shape)
    kmax = params.truncation
    small_run = 0
    for k in range(0, kmax + 1):
        ks = [0] if k == 0 else [k, -k]
        block = np.zeros(za.shape)
        for kk in ks:
            mvec = params.shifted(kk)
            if method == "meijerg":
                jv_ = np.array([complex(_meijer_complex_mp(params, mvec, v, dps)) for v in r])
                je = 1e-25 * np.maximum(1, np.abs(jv_))
            else:
                c = Contour.for_poles(params.rightmost_pole(mvec), params.max_imag(), sigma1=sigma1,
                                      extra_length=2.0 * max(abs(m) for m in mvec))
                jv_, je = j_complex(params, mvec, r, c)
            total += jv_ * np.exp(1j * kk * phi) / (2 * math.pi)
            err += je / (2 * math.pi)
            block = np.maximum(block, np.abs(jv_) / (2 * math.pi))
        if params.M_max is None and k > max(abs(v) for v in params.m) and np.all(block < tol * 1e-2):
            small_run += 1
            if small_run >= 2:
                return KernelEval(total, err, method)
        else:
            small_run = 0
    err += block
    return KernelEval(total, err, method)


def bessel_kernel_complex(params: BesselParamsComplex, z, tol: float = 1e-10, **kw):
    ev = evaluate_complex(params, z, tol, **kw)
    if np.any(ev.err > tol):
        raise ToleranceError(f"kernel error estimate {ev.err.max():.2e} exceeds tol {tol:.1e}")
    return ev.value if np.ndim(z) else complex(ev.value[0])


# -- asymptotics ----------------------------------------------------------------------


def dominant_frequency(x: np.ndarray, g: np.ndarray, fmin: float = 0.2, fmax: float = 10.0) -> float:
    """Frequency (cycles per unit x) maximising the windowed periodogram of g, refined locally."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=complex)
    g = g - np.mean(g)
    win = np.hanning(len(x))
    dx = np.gradient(x)

    def power(f):
        return -abs(np.sum(win * g * dx * np.exp(-2j * math.pi * f * x)))

    span = x[-1] - x[0]
    grid = np.arange(fmin, fmax, 0.1 / span)
    vals = np.array([power(f) for f in grid])
    f0 = grid[int(np.argmin(vals))]
    res = minimize_scalar(power, bounds=(f0 - 1 / span, f0 + 1 / span), method="bounded",
                          options={"xatol": 1e-8})
    return float(res.x)


@dataclass
class AsymptoticReport:
    rank: int
    x: np.ndarray
    scaled: np.ndarray = field(repr=False)
    frequency: float = float("nan")
    envelope: tuple[float, float] = (float("nan"), float("nan"))
    negative_ratio: float | None = None
    negative_envelope: float | None = None

    @property
    def frequency_ok(self) -> bool:
        return abs(self.frequency - self.rank) <= 0.01

    @property
    def decay_ok(self) -> bool | None:
        if self.negative_ratio is None:
            return None
        return self.negative_ratio < self.negative_envelope


def asymptotic_check_real(params: BesselParamsReal, x_grid, dps: int = 30,
                          negative_points: tuple[float, float] | None = None,
                          negative_dps: int = 120) -> AsymptoticReport:
    """Leading-order checks in the regime x >> 1.

    The scaled profile x^((r-1)/2) J(x^r) should have bounded envelope and
    dominant frequency r.  For rank 2 the value at negative arguments must
    decay like exp(-2 pi r sin(pi/r) x): compared at the two given x.
    """
    r = params.rank
    x = np.asarray(x_grid, dtype=float)
    method = "closed" if params.is_discrete_gl2 else "meijerg"
    vals = evaluate_real(params, x**r, method=method, dps=dps).value
    scaled = vals * x ** ((r - 1) / 2)
    rep = AsymptoticReport(r, x, scaled)
    rep.frequency = dominant_frequency(x, scaled, fmin=0.5, fmax=2 * r + 1)
    rep.envelope = (float(np.min(np.abs(scaled))), float(np.max(np.abs(scaled))))
    if negative_points is not None:
        a, b = negative_points
        va = _kernel_real_meijer(params, np.array([-(a**r)]), negative_dps)[0][0]
        vb = _kernel_real_meijer(params, np.array([-(b**r)]), negative_dps)[0][0]
        rep.negative_ratio = float(abs(vb) / abs(va)) if va != 0 else 0.0
        rep.negative_envelope = math.exp(-2 * math.pi * r * math.sin(math.pi / r) * (b - a))
    return rep
