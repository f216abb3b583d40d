"""Exact number-field arithmetic and the archimedean picture F_inf = R^r1 x C^r2.

Elements are stored as exact rational coordinate vectors over a fixed integral
basis; floats only appear when an element is pushed into F_inf.  Residue-level
operations (gcd, modular inverses, residue enumeration) assume a norm-Euclidean
ring of integers, which covers every field shipped in ``fields/``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FIELDS_DIR = Path(__file__).parent / "fields"


class UnsupportedFieldError(ValueError):
    """Residue arithmetic requested over a field not flagged norm-Euclidean."""


class NotCoprimeError(ValueError):
    def __init__(self, divisor: "FieldElement"):
        super().__init__(f"arguments share the non-unit divisor {divisor}")
        self.divisor = divisor


class SearchCapError(RuntimeError):
    def __init__(self, required: int, cap: int):
        super().__init__(f"search needs {required} points, cap is {cap}")
        self.required = required
        self.cap = cap


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def _det(rows: list[list[Fraction]]) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return det


def _inverse(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    m = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[piv] = m[piv], m[c]
        p = m[c][c]
        m[c] = [v / p for v in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return [row[n:] for row in m]


def _polymulmod(a: list[Fraction], b: list[Fraction], poly: list[int]) -> list[Fraction]:
    """Product of two power-basis vectors modulo a monic polynomial."""
    n = len(poly) - 1
    out = [Fraction(0)] * (2 * n - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    for k in range(len(out) - 1, n - 1, -1):
        c = out[k]
        if c:
            # x^k = x^(k-n) * x^n and x^n = -(c_0 + ... + c_{n-1} x^{n-1})
            for i in range(n):
                out[k - n + i] -= c * poly[i]
            out[k] = Fraction(0)
    return out[:n]


class NumberField:
    """A number field given by a monic minimal polynomial and an integral basis."""

    def __init__(
        self,
        min_poly: Sequence[int],
        basis: Sequence[Sequence] | None = None,
        units: Sequence[Sequence[int]] = (),
        torsion: int = 2,
        norm_euclidean: bool = False,
        name: str = "",
    ):
        self.min_poly = [int(c) for c in min_poly]
        if self.min_poly[-1] != 1:
            raise ValueError("minimal polynomial must be monic")
        self.degree = len(self.min_poly) - 1
        n = self.degree
        if basis is None:
            basis = [[int(i == j) for j in range(n)] for i in range(n)]
        self.basis = [[_frac(c) for c in row] for row in basis]
        if len(self.basis) != n or any(len(r) != n for r in self.basis):
            raise ValueError("basis must be an N x N matrix of power-basis coordinates")
        if _det(self.basis) == 0:
            raise ValueError("basis is singular")
        self._basis_inv = _inverse(self.basis)
        self.units_coords = [tuple(int(c) for c in u) for u in units]
        self.torsion = int(torsion)
        self.norm_euclidean = bool(norm_euclidean)
        self.name = name or f"Q[x]/({self.min_poly})"

        # structure constants: beta_i * beta_j = sum_k mult[i][j][k] beta_k
        self._mult = [
            [self._from_power(_polymulmod(self.basis[i], self.basis[j], self.min_poly)) for j in range(n)]
            for i in range(n)
        ]
        self._roots = self._compute_roots()
        self.r1 = sum(1 for z in self._roots if z.imag == 0.0)
        self.r2 = len(self._roots) - self.r1
        if self.r1 + 2 * self.r2 != n:
            raise ValueError("signature does not add up to the degree")

    @classmethod
    def from_config(cls, cfg: dict) -> "NumberField":
        return cls(
            min_poly=cfg["min_poly"],
            basis=cfg.get("basis"),
            units=cfg.get("units", ()),
            torsion=cfg.get("torsion", 2),
            norm_euclidean=cfg.get("norm_euclidean", False),
            name=cfg.get("name", ""),
        )

    def __repr__(self) -> str:
        return f"NumberField({self.name!r}, degree={self.degree}, signature={self.signature})"

    def _from_power(self, v: list[Fraction]) -> tuple[Fraction, ...]:
        n = self.degree
        return tuple(sum(v[k] * self._basis_inv[k][j] for k in range(n)) for j in range(n))

    def _compute_roots(self) -> list[complex]:
        coeffs = self.min_poly[::-1]
        roots = np.roots(np.array(coeffs, dtype=float)) if self.degree > 1 else np.array([-float(self.min_poly[0])])
        dp = np.polyder(np.array(coeffs, dtype=float)) if self.degree > 1 else None
        polished = []
        for z in roots:
            z = complex(z)
            for _ in range(4):
                if dp is None:
                    break
                d = np.polyval(dp, z)
                if d == 0:
                    break
                z = z - np.polyval(coeffs, z) / d
            if abs(z.imag) < 1e-12 * max(1.0, abs(z)):
                z = complex(z.real, 0.0)
            polished.append(z)
        real = sorted((z for z in polished if z.imag == 0.0), key=lambda z: -z.real)
        cplx = sorted((z for z in polished if z.imag > 0.0), key=lambda z: (-z.real, -z.imag))
        return real + cplx

    @property
    def signature(self) -> tuple[int, int]:
        return (self.r1, self.r2)

    @property
    def n_places(self) -> int:
        return self.r1 + self.r2

    @property
    def local_degrees(self) -> np.ndarray:
        return np.array([1] * self.r1 + [2] * self.r2)

    @cached_property
    def embedding_matrix(self) -> np.ndarray:
        """(places x N) complex matrix of sigma_v(beta_j)."""
        out = np.zeros((self.n_places, self.degree), dtype=complex)
        for v, z in enumerate(self._roots):
            powers = np.array([z**k for k in range(self.degree)])
            for j, row in enumerate(self.basis):
                out[v, j] = sum(float(c) * p for c, p in zip(row, powers))
        return out

    @cached_property
    def real_embedding_matrix(self) -> np.ndarray:
        """N x N real matrix: coordinates -> real coordinates of F_inf.

        Real places contribute one row, complex places two rows (Re, Im).
        """
        e = self.embedding_matrix
        rows = [e[v].real for v in range(self.r1)]
        for v in range(self.r1, self.n_places):
            rows.append(e[v].real)
            rows.append(e[v].imag)
        return np.array(rows)

    @cached_property
    def trace_form(self) -> np.ndarray:
        """Diagonal matrix I with Tr(xy) = x^T I y in real coordinates of F_inf."""
        d = [1.0] * self.r1 + [2.0, -2.0] * self.r2
        return np.diag(d)

    @cached_property
    def root_residuals(self) -> np.ndarray:
        coeffs = self.min_poly[::-1]
        return np.array([abs(np.polyval(coeffs, z)) for z in self._roots])

    # -- element constructors -------------------------------------------------

    def element(self, coords: Iterable) -> "FieldElement":
        c = tuple(_frac(x) for x in coords)
        if len(c) != self.degree:
            raise ValueError(f"expected {self.degree} coordinates, got {len(c)}")
        return FieldElement(self, c)

    def integer(self, coords: Iterable[int]) -> "FieldElement":
        return self.element([int(x) for x in coords])

    def rational(self, q) -> "FieldElement":
        """The rational number q as a field element."""
        power = [_frac(q)] + [Fraction(0)] * (self.degree - 1)
        return FieldElement(self, self._from_power(power))

    def one(self) -> "FieldElement":
        return self.rational(1)

    def zero(self) -> "FieldElement":
        return FieldElement(self, (Fraction(0),) * self.degree)

    @cached_property
    def fundamental_units(self) -> list["FieldElement"]:
        return [self.integer(u) for u in self.units_coords]

    def mul_coords(self, a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Fraction, ...]:
        n = self.degree
        out = [Fraction(0)] * n
        for i in range(n):
            if not a[i]:
                continue
            for j in range(n):
                if not b[j]:
                    continue
                p = a[i] * b[j]
                row = self._mult[i][j]
                for k in range(n):
                    if row[k]:
                        out[k] += p * row[k]
        return tuple(out)

    def mult_matrix(self, a: Sequence[Fraction]) -> list[list[Fraction]]:
        """Matrix M with a * beta_j = sum_k M[k][j] beta_k."""
        n = self.degree
        cols = [self.mul_coords(a, tuple(Fraction(int(i == j)) for i in range(n))) for j in range(n)]
        return [[cols[j][k] for j in range(n)] for k in range(n)]

    @cached_property
    def int_mult_tensor(self) -> np.ndarray:
        """Integer structure constants (when the basis is integral)."""
        t = np.array([[[self._mult[i][j][k] for k in range(self.degree)] for j in range(self.degree)]
                      for i in range(self.degree)], dtype=object)
        return t


@dataclass(frozen=True, eq=False)
class FieldElement:
    field: NumberField = field(repr=False)
    coords: tuple[Fraction, ...]

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.field.rational(other)
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.field is other.field and self.coords == other.coords

    def __hash__(self):
        return hash((id(self.field), self.coords))

    def __repr__(self):
        return f"FieldElement({[str(c) for c in self.coords]})"

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise ValueError("elements belong to different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.rational(other)
        raise TypeError(f"cannot combine FieldElement with {type(other).__name__}")

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement(self.field, tuple(a + b for a, b in zip(self.coords, o.coords)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return FieldElement(self.field, self.field.mul_coords(self.coords, o.coords))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero:
            raise ZeroDivisionError("inverse of zero")
        m = self.field.mult_matrix(self.coords)
        inv = _inverse(m)
        one = self.field.one().coords
        return FieldElement(self.field, tuple(sum(inv[k][j] * one[j] for j in range(len(one))) for k in range(len(one))))

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    @property
    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)

    @property
    def int_coords(self) -> tuple[int, ...]:
        if not self.is_integral:
            raise ValueError(f"{self} is not integral")
        return tuple(int(c) for c in self.coords)

    @property
    def norm(self) -> Fraction:
        return _det(self.field.mult_matrix(self.coords))

    @property
    def trace(self) -> Fraction:
        m = self.field.mult_matrix(self.coords)
        return sum((m[i][i] for i in range(len(m))), Fraction(0))

    @property
    def is_unit(self) -> bool:
        return self.is_integral and not self.is_zero and abs(self.norm) == 1

    def denominator(self) -> int:
        return math.lcm(*(c.denominator for c in self.coords))


FieldInteger = FieldElement


@dataclass(frozen=True)
class EmbeddedPoint:
    """A point of F_inf: one real value per real place, one complex per complex place."""

    values: np.ndarray
    r1: int
    r2: int

    @classmethod
    def from_values(cls, field: NumberField, values: Sequence) -> "EmbeddedPoint":
        v = np.asarray(values, dtype=complex).reshape(-1)
        if v.size != field.n_places:
            raise ValueError(f"expected {field.n_places} place values")
        return cls(v, field.r1, field.r2)

    @property
    def modules(self) -> np.ndarray:
        """Normalized module per place: |x| at real places, |x|^2 at complex ones."""
        a = np.abs(self.values)
        return np.concatenate([a[: self.r1], a[self.r1:] ** 2])

    @property
    def norm(self) -> float:
        return float(np.prod(self.modules))

    @property
    def trace(self) -> float:
        v = self.values
        return float(np.sum(v[: self.r1].real) + 2 * np.sum(v[self.r1:].real))

    def real_coords(self) -> np.ndarray:
        v = self.values
        out = list(v[: self.r1].real)
        for z in v[self.r1:]:
            out += [z.real, z.imag]
        return np.array(out)

    def __mul__(self, other: "EmbeddedPoint") -> "EmbeddedPoint":
        return EmbeddedPoint(self.values * other.values, self.r1, self.r2)

    def __sub__(self, other: "EmbeddedPoint") -> "EmbeddedPoint":
        return EmbeddedPoint(self.values - other.values, self.r1, self.r2)

    def __add__(self, other: "EmbeddedPoint") -> "EmbeddedPoint":
        return EmbeddedPoint(self.values + other.values, self.r1, self.r2)


@dataclass(frozen=True)
class Parallelotope:
    """T * Pi = {sum_j t_j sigma(beta_j) : |t_j| <= T/2}, symmetric about zero."""

    field: NumberField
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def contains_coords(self, coords: np.ndarray) -> np.ndarray:
        c = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.all(np.abs(c) <= self.scale / 2 + 1e-12, axis=1)

    def contains(self, x: EmbeddedPoint) -> bool:
        t = np.linalg.solve(self.field.real_embedding_matrix, x.real_coords())
        return bool(np.all(np.abs(t) <= self.scale / 2 + 1e-12))

    def lattice_points(self, exclude_zero: bool = True) -> np.ndarray:
        return enumerate_lattice(self.field, self.scale, exclude_zero)


# -- field catalogue --------------------------------------------------------------


def load_field(spec: str | Path | dict) -> NumberField:
    """Load a field from a catalogue name ("Q", "Qi", "Qsqrt2", ...), a JSON path or a dict."""
    if isinstance(spec, dict):
        return NumberField.from_config(spec)
    path = Path(spec)
    if not path.suffix:
        path = FIELDS_DIR / f"{spec}.json"
    with open(path) as fh:
        cfg = json.load(fh)
    cfg.setdefault("name", path.stem)
    return NumberField.from_config(cfg)


def available_fields() -> list[str]:
    return sorted(p.stem for p in FIELDS_DIR.glob("*.json"))


# -- embeddings, norm and trace -------------------------------------------------


def embed(field: NumberField, e: FieldElement | Sequence) -> EmbeddedPoint:
    coords = e.coords if isinstance(e, FieldElement) else tuple(e)
    if len(coords) != field.degree:
        raise ValueError(f"coordinate vector has length {len(coords)}, basis has {field.degree}")
    vals = field.embedding_matrix @ np.array([float(c) for c in coords])
    vals = np.where(np.arange(field.n_places) < field.r1, vals.real + 0j, vals)
    return EmbeddedPoint(vals, field.r1, field.r2)


def embed_coords(field: NumberField, coords: np.ndarray) -> np.ndarray:
    """Vectorised embedding of an (M, N) array of coordinates -> (M, places) complex."""
    return np.asarray(coords, dtype=float) @ field.embedding_matrix.T


def norm_trace(field: NumberField, e: FieldElement) -> tuple[Fraction, Fraction]:
    if e.field is not field:
        e = field.element(e.coords)
    return e.norm, e.trace


def trace_coefficients(field: NumberField) -> list[Fraction]:
    """Tr(beta_j) for the integral basis; Tr(e) = sum_j coords_j * Tr(beta_j)."""
    return [field.element([int(i == j) for i in range(field.degree)]).trace for j in range(field.degree)]


# -- lattice enumeration ----------------------------------------------------------

DEFAULT_POINT_CAP = 5_000_000


def lattice_count(field: NumberField, T: float, exclude_zero: bool = True) -> int:
    h = math.floor(T / 2)
    return (2 * h + 1) ** field.degree - int(exclude_zero)


def enumerate_lattice(field: NumberField, T: float, exclude_zero: bool = True,
                      cap: int = DEFAULT_POINT_CAP) -> np.ndarray:
    """Integer coordinate vectors of O ∩ T·Π (closed box |c_j| <= T/2), lexicographic order."""
    if T <= 0:
        raise ValueError("T must be positive")
    need = lattice_count(field, T, exclude_zero)
    if need > cap:
        raise SearchCapError(need, cap)
    h = math.floor(T / 2)
    axis = np.arange(-h, h + 1)
    grids = np.meshgrid(*([axis] * field.degree), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    if exclude_zero:
        pts = pts[np.any(pts != 0, axis=1)]
    return pts


# -- Dirichlet approximation ------------------------------------------------------


@dataclass(frozen=True)
class DirichletResult:
    alpha: FieldElement
    beta: FieldElement
    residuals: np.ndarray      # |beta_v theta_v - alpha_v| per place
    beta_sizes: np.ndarray     # |beta_v| per place
    constant: float            # C_F
    Q: float

    @property
    def quality(self) -> float:
        return float(self.Q * np.max(self.residuals))

    def satisfies_bounds(self, slack: float = 1e-9) -> bool:
        c = self.constant * (1 + slack)
        return bool(np.all(self.beta_sizes <= c * self.Q) and np.all(self.residuals <= c / self.Q))


def dirichlet_constant(field: NumberField) -> float:
    """C_F = max_v sum_j |sigma_v(beta_j)|: the pigeonhole constant for the integral basis."""
    return float(np.max(np.sum(np.abs(field.embedding_matrix), axis=1)))


def _half_space(field: NumberField, Q: float) -> np.ndarray:
    """All q with 1 <= max|q_j| < Q, first nonzero coordinate positive."""
    h = math.ceil(Q) - 1
    axis = np.arange(-h, h + 1)
    grids = np.meshgrid(*([axis] * field.degree), indexing="ij")
    q = np.stack([g.reshape(-1) for g in grids], axis=1)
    q = q[np.max(np.abs(q), axis=1) < Q]
    first = np.array([row[np.nonzero(row)[0][0]] if np.any(row) else 0 for row in q])
    return q[first > 0]


def dirichlet_approx(field: NumberField, theta: EmbeddedPoint | Sequence, Q: float,
                     cap: int = 2_000_000) -> DirichletResult:
    """Exhaustive simultaneous approximation: beta*theta close to alpha at every place.

    Searches beta = sum q_j beta_j over 1 <= max|q_j| < Q, rounds beta*theta
    coordinate-wise to get alpha, and returns the pair minimising
    max_v |beta_v theta_v - alpha_v|.
    """
    if Q <= 1:
        raise ValueError("Q must exceed 1")
    if not isinstance(theta, EmbeddedPoint):
        theta = EmbeddedPoint.from_values(field, theta)
    need = (2 * math.ceil(Q) - 1) ** field.degree
    if need > cap:
        raise SearchCapError(need, cap)
    q = _half_space(field, Q)
    emb = field.embedding_matrix
    beta_v = q @ emb.T                                   # (M, places)
    prod = beta_v * theta.values[None, :]
    # real coordinates of beta*theta, then coordinates over the integral basis
    rc = np.concatenate([prod[:, : field.r1].real] +
                        [np.stack([prod[:, v].real, prod[:, v].imag], axis=1)
                         for v in range(field.r1, field.n_places)], axis=1) if field.r2 else prod.real
    t = np.linalg.solve(field.real_embedding_matrix, rc.T).T
    a = np.rint(t)
    alpha_v = a @ emb.T
    res = np.abs(prod - alpha_v)
    score = np.round(np.max(res, axis=1), 12)
    size = np.max(np.abs(q), axis=1)
    l1 = np.sum(np.abs(q), axis=1)
    tail = [np.abs(q[:, j]) for j in range(field.degree - 1, -1, -1)]
    order = np.lexsort(tuple(reversed([score, size, l1, *tail])))
    best = order[0]
    alpha = field.integer(a[best].astype(int).tolist())
    beta = field.integer(q[best].tolist())
    return DirichletResult(alpha, beta, res[best], np.abs(beta_v[best]), dirichlet_constant(field), float(Q))


# -- Euclidean arithmetic in O ------------------------------------------------------


def _require_euclidean(field: NumberField):
    if not field.norm_euclidean:
        raise UnsupportedFieldError(f"{field.name} is not flagged norm-Euclidean")


def euclid_divmod(field: NumberField, a: FieldElement, b: FieldElement) -> tuple[FieldElement, FieldElement]:
    """a = q*b + r with |N(r)| < |N(b)|, q from rounding the coordinates of a/b."""
    _require_euclidean(field)
    if b.is_zero:
        raise ZeroDivisionError("division by zero")
    x = (a / b).coords
    nb = abs(b.norm)
    base = [math.floor(c + Fraction(1, 2)) for c in x]
    candidates = [base] + [
        [bc + d for bc, d in zip(base, delta)]
        for delta in itertools.product((-1, 0, 1), repeat=field.degree) if any(delta)
    ]
    for qc in candidates:
        q = field.integer(qc)
        r = a - q * b
        if abs(r.norm) < nb:
            return q, r
    raise UnsupportedFieldError(f"no Euclidean remainder found in {field.name}")


def gcd(field: NumberField, a: FieldElement, b: FieldElement) -> FieldElement:
    while not b.is_zero:
        _, r = euclid_divmod(field, a, b)
        a, b = b, r
    return a


def xgcd(field: NumberField, a: FieldElement, b: FieldElement):
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b)."""
    one, zero = field.one(), field.zero()
    r0, r1, s0, s1, t0, t1 = a, b, one, zero, zero, one
    while not r1.is_zero:
        q, r = euclid_divmod(field, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return r0, s0, t0


def make_coprime(field: NumberField, a: FieldElement, b: FieldElement):
    """Split a/b as (alpha, beta, delta) with a = delta*alpha, b = delta*beta, gcd(alpha, beta) a unit."""
    _require_euclidean(field)
    if b.is_zero:
        raise ZeroDivisionError("beta must be nonzero")
    d = gcd(field, a, b)
    d = _normalize_associate(field, d)
    return a / d, b / d, d


def _normalize_associate(field: NumberField, x: FieldElement) -> FieldElement:
    """Pick a sign for x so that its first nonzero coordinate is positive."""
    for c in x.coords:
        if c:
            return x if c > 0 else -x
    return x


def _hnf(rows: list[list[int]]) -> list[list[int]]:
    """Upper-triangular Hermite normal form of a full-rank square integer lattice basis."""
    m = [list(r) for r in rows]
    n = len(m)
    for c in range(n):
        # Euclid on column c among rows c..n-1
        while True:
            nz = [r for r in range(c, n) if m[r][c] != 0]
            if not nz:
                raise ValueError("lattice is not full rank")
            p = min(nz, key=lambda r: abs(m[r][c]))
            m[c], m[p] = m[p], m[c]
            done = True
            for r in range(c + 1, n):
                if m[r][c]:
                    f = m[r][c] // m[c][c]
                    m[r] = [a - f * b for a, b in zip(m[r], m[c])]
                    if m[r][c]:
                        done = False
            if done:
                break
        if m[c][c] < 0:
            m[c] = [-a for a in m[c]]
    for c in range(n):
        for r in range(c):
            f = m[r][c] // m[c][c]
            if f:
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return m


@dataclass(frozen=True)
class ResidueRing:
    """O/(m) with canonical representatives 0 <= c_j < d_j from the Hermite form of (m)."""

    field: NumberField
    modulus: FieldElement
    hnf: tuple[tuple[int, ...], ...]

    @property
    def diag(self) -> tuple[int, ...]:
        return tuple(self.hnf[j][j] for j in range(len(self.hnf)))

    @property
    def size(self) -> int:
        return math.prod(self.diag)

    def reduce(self, x: FieldElement | Sequence[int]) -> FieldElement:
        c = list(x.int_coords if isinstance(x, FieldElement) else x)
        for j, row in enumerate(self.hnf):
            f = c[j] // row[j]
            if f:
                c = [a - f * b for a, b in zip(c, row)]
        return self.field.integer(c)

    def elements(self) -> list[FieldElement]:
        return [self.field.integer(c) for c in itertools.product(*(range(d) for d in self.diag))]

    def units(self) -> list[FieldElement]:
        return [x for x in self.elements() if gcd(self.field, x, self.modulus).is_unit]


def residue_ring(field: NumberField, m: FieldElement) -> ResidueRing:
    _require_euclidean(field)
    if m.is_zero or not m.is_integral:
        raise ValueError("modulus must be a nonzero integer of the field")
    n = field.degree
    rows = []
    for j in range(n):
        basis_j = tuple(Fraction(int(i == j)) for i in range(n))
        rows.append([int(c) for c in field.mul_coords(m.coords, basis_j)])
    return ResidueRing(field, m, tuple(tuple(r) for r in _hnf(rows)))


def mod_inverse(field: NumberField, a: FieldElement, m: FieldElement) -> FieldElement:
    """Canonical representative x of a^{-1} mod m."""
    _require_euclidean(field)
    g, x, _ = xgcd(field, a, m)
    if not g.is_unit:
        raise NotCoprimeError(_normalize_associate(field, g))
    x = x / g
    return residue_ring(field, m).reduce(x)


def to_residue(field: NumberField, x: FieldElement, m: FieldElement) -> FieldElement:
    """Representative in O of x in F_b (denominator prime to m) modulo m."""
    ring = residue_ring(field, m)
    d = x.denominator()
    if d == 1:
        return ring.reduce(x)
    dinv = mod_inverse(field, field.rational(d), m)
    return ring.reduce((x * d) * dinv)


# -- unit orbits --------------------------------------------------------------------


def unit_orbit_count(field: NumberField, gamma: FieldElement, T: Sequence[float] | float) -> int:
    """Card({gamma*eps : eps unit} ∩ {|x_v| <= T_v for all v})."""
    if gamma.is_zero:
        raise ValueError("gamma must be nonzero")
    rank = field.r1 + field.r2 - 1
    if len(field.units_coords) < rank:
        raise ValueError(f"{field.name}: need {rank} fundamental units, have {len(field.units_coords)}")
    T = np.broadcast_to(np.asarray(T, dtype=float), (field.n_places,))
    g = np.abs(embed(field, gamma).values)
    if rank == 0:
        return field.torsion if np.all(g <= T * (1 + 1e-12)) else 0
    units = field.fundamental_units[:rank]
    L = np.array([np.log(np.abs(embed(field, u).values)) for u in units]).T   # places x rank
    lg = np.log(g)
    upper = np.log(T)
    # y = lg + L k must satisfy y_v <= upper_v; sum_v N_v y_v is fixed, which bounds y from below
    nv = field.local_degrees
    total = float(np.sum(nv * lg))
    lower = np.array([(total - (np.sum(nv * upper) - nv[v] * upper[v])) / nv[v] for v in range(field.n_places)])
    if np.any(lower > upper + 1e-12):
        return 0
    span = np.max(np.abs(np.concatenate([upper - lg, lower - lg])))
    kmax = int(math.ceil(np.linalg.norm(np.linalg.pinv(L), 2) * span * math.sqrt(field.n_places))) + 1
    count = 0
    for k in itertools.product(range(-kmax, kmax + 1), repeat=rank):
        y = lg + L @ np.array(k, dtype=float)
        if np.all(y <= upper + 1e-12):
            count += 1
    return count * field.torsion
