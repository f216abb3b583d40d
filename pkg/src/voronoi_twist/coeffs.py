"""Fourier-coefficient providers.

* ``DeltaProvider``: Ramanujan's Delta, unitarily normalised, lambda(n) = tau(n)/n^(11/2).
* ``Sym2DeltaProvider``: the symmetric-square lift of Delta to GL3, A(m, n).
* ``ConstantProvider``: A = 1 everywhere, a control with no cancellation.
* ``SyntheticProvider``: multiplicative coefficients from random unitary Satake data,
  keyed on the absolute norm; usable over any shipped field for plumbing only.

tau(n) comes from the q-expansion of eta^24 = (eta^3)^8, with eta^3 given by
Jacobi's identity and the three squarings done by Kronecker substitution in gmpy2.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import gmpy2
import numpy as np

from .numberfield import FieldElement, NumberField, load_field

TAU_CAP = 10**6
INT64_LIMIT = 2**63 - 1


class CapExceededError(ValueError):
    pass


# -- tau via eta products -----------------------------------------------------------


def _pack(coeffs: Sequence[int], nb: int) -> gmpy2.mpz:
    return gmpy2.mpz(int.from_bytes(b"".join(c.to_bytes(nb, "little") for c in coeffs), "little"))


def _unpack(z: gmpy2.mpz, nb: int, n: int) -> list[int]:
    nbytes = max(nb * n, (int(z).bit_length() + 7) // 8)
    bs = int(z).to_bytes(nbytes, "little")
    return [int.from_bytes(bs[i * nb:(i + 1) * nb], "little") for i in range(n)]


def _kronecker_mul(a: list[int], b: list[int], n: int, nb: int) -> list[int]:
    """Truncated product of two signed integer series, slot width nb bytes."""
    ap = [c if c > 0 else 0 for c in a]
    an = [-c if c < 0 else 0 for c in a]
    bp = [c if c > 0 else 0 for c in b]
    bn = [-c if c < 0 else 0 for c in b]

    def prod(u, v):
        return _unpack(_pack(u, nb) * _pack(v, nb), nb, n)

    pp, nn, pn, npos = prod(ap, bp), prod(an, bn), prod(ap, bn), prod(an, bp)
    return [pp[i] + nn[i] - pn[i] - npos[i] for i in range(n)]


def eta_power_24(n_terms: int) -> list[int]:
    """Coefficients c_0..c_{n-1} of prod_k (1 - q^k)^24."""
    e3 = [0] * n_terms
    k = 0
    while k * (k + 1) // 2 < n_terms:
        e3[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    # positive-part convolutions of eta^12 are bounded by n * (n^{5/2})^2; leave headroom
    bits = int(7 * math.log2(max(n_terms, 2))) + 32
    nb = (bits + 7) // 8
    e6 = _kronecker_mul(e3, e3, n_terms, nb)
    e12 = _kronecker_mul(e6, e6, n_terms, nb)
    return _kronecker_mul(e12, e12, n_terms, nb)


class TauTable:
    """Memoised tau(n); grows by doubling, guarded for concurrent readers."""

    def __init__(self, cap: int = TAU_CAP):
        self.cap = cap
        self._values: list[int] = [0, 1]
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._values) - 1

    def ensure(self, n: int) -> None:
        if n > self.cap:
            raise CapExceededError(f"tau({n}) requested, cap is {self.cap}")
        if n < len(self._values):
            return
        with self._lock:
            if n < len(self._values):
                return
            size = min(self.cap, max(n, 2 * len(self._values), 64))
            coeffs = eta_power_24(size)
            self._values = [0] + coeffs

    def __call__(self, n: int) -> int:
        if n < 1:
            raise ValueError("tau is defined for n >= 1")
        self.ensure(n)
        return self._values[n]

    def values(self, n_max: int) -> list[int]:
        self.ensure(n_max)
        return self._values[1:n_max + 1]


_TAU = TauTable()


def tau(n: int) -> int:
    return _TAU(int(n))


def tau_list(n_max: int) -> list[int]:
    """[tau(1), ..., tau(n_max)]."""
    return _TAU.values(n_max)


def gl2_lambda(n: int) -> float:
    n = int(n)
    return tau(n) / n**5.5


_LAMBDA_CACHE: dict[str, np.ndarray] = {}
_LAMBDA_LOCK = threading.Lock()


def lambda_array(n_max: int) -> np.ndarray:
    """Array L with L[n] = lambda(n) for 1 <= n <= n_max and L[0] = 0."""
    cached = _LAMBDA_CACHE.get("delta")
    if cached is not None and len(cached) > n_max:
        return cached[: n_max + 1]
    size = max(n_max, 2 * (len(cached) if cached is not None else 0), 1024)
    size = min(size, TAU_CAP) if n_max <= TAU_CAP else n_max
    t = tau_list(size)
    n = np.arange(1, size + 1, dtype=float)
    arr = np.zeros(size + 1)
    arr[1:] = np.array([float(v) for v in t]) / n**5.5
    with _LAMBDA_LOCK:
        _LAMBDA_CACHE["delta"] = arr
    return arr[: n_max + 1]


def save_tau_cache(path: str | Path, n_max: int) -> int:
    """Write tau(1..n) as little-endian int64 with a JSON sidecar; stops before int64 overflow.

    Returns the number of values written.
    """
    values = tau_list(n_max)
    count = next((i for i, v in enumerate(values) if abs(v) > INT64_LIMIT), len(values))
    path = Path(path)
    np.asarray(values[:count], dtype="<i8").tofile(path)
    header = {"format": "int64-le", "first_index": 1, "count": count, "requested": n_max,
              "truncated_at_int64_overflow": count < n_max}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2))
    return count


def load_tau_cache(path: str | Path) -> list[int]:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.fromfile(path, dtype="<i8", count=header["count"])
    return [int(v) for v in data]


# -- factorisation helpers ------------------------------------------------------------


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    n = int(n)
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def smallest_prime_factor(n_max: int) -> np.ndarray:
    spf = np.arange(n_max + 1)
    for p in range(2, int(math.isqrt(n_max)) + 1):
        if spf[p] == p:
            block = spf[p * p::p]
            mask = block == np.arange(p * p, n_max + 1, p)
            block[mask] = p
    return spf


def primes_up_to(n: int) -> np.ndarray:
    spf = smallest_prime_factor(n)
    idx = np.arange(2, n + 1)
    return idx[spf[2:] == idx]


# -- symmetric square ------------------------------------------------------------------


def _complete_symmetric(e1: float, kmax: int) -> list[float]:
    """h_0..h_kmax for Satake parameters {a^2, 1, a^-2}: e1 = e2 = A(p,1), e3 = 1."""
    h = [1.0]
    for k in range(1, kmax + 1):
        v = e1 * h[k - 1]
        if k >= 2:
            v -= e1 * h[k - 2]
        if k >= 3:
            v += h[k - 3]
        h.append(v)
    return h


def sym2_prime_power(lam_p: float, a: int, b: int) -> float:
    """A(p^a, p^b) as the Schur polynomial s_(a+b, a, 0) of {alpha^2, 1, alpha^-2}."""
    e1 = lam_p * lam_p - 1.0
    h = _complete_symmetric(e1, a + b + 1)
    hm1 = h[a - 1] if a >= 1 else 0.0
    return h[a + b] * h[a] - h[a + b + 1] * hm1


def gl3_sym2(m: int, n: int) -> float:
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise ValueError("arguments must be positive")
    fm, fn = factorize(m), factorize(n)
    out = 1.0
    for p in set(fm) | set(fn):
        out *= sym2_prime_power(gl2_lambda(p), fm.get(p, 0), fn.get(p, 0))
    return out


_SYM2_CACHE: list[np.ndarray] = [np.zeros(1)]


def sym2_array(n_max: int) -> np.ndarray:
    """S with S[n] = A(1, n) for 1 <= n <= n_max, S[0] = 0.  Cached; do not mutate."""
    if len(_SYM2_CACHE[0]) <= n_max:
        _SYM2_CACHE[0] = _sym2_array(max(n_max, 2 * (len(_SYM2_CACHE[0]) - 1)))
    return _SYM2_CACHE[0][:n_max + 1]


def _sym2_array(n_max: int) -> np.ndarray:
    lam = lambda_array(n_max)
    spf = smallest_prime_factor(n_max)
    out = np.zeros(n_max + 1)
    if n_max >= 1:
        out[1] = 1.0
    hcache: dict[int, list[float]] = {}
    for n in range(2, n_max + 1):
        p = int(spf[n])
        m, k = n, 0
        while m % p == 0:
            m //= p
            k += 1
        h = hcache.get(p)
        if h is None or len(h) <= k:
            h = _complete_symmetric(lam[p] ** 2 - 1.0, max(k, 8))
            hcache[p] = h
        out[n] = out[m] * h[k]
    return out


def sym2_row(m: int, n: np.ndarray) -> np.ndarray:
    """A(m, n) for a fixed m >= 1 and an array of positive n."""
    n = np.asarray(n, dtype=np.int64)
    if n.size == 0:
        return np.zeros(0)
    fm = factorize(m)
    core = n.copy()
    extra = np.ones(n.shape)
    for p, a in fm.items():
        k = np.zeros(n.shape, dtype=np.int64)
        while True:
            hit = core % p == 0
            if not hit.any():
                break
            core[hit] //= p
            k[hit] += 1
        lam_p = gl2_lambda(p)
        table = np.array([sym2_prime_power(lam_p, a, b) for b in range(int(k.max()) + 1)])
        extra *= table[k]
    return sym2_array(int(core.max()))[core] * extra


# -- providers ---------------------------------------------------------------------------


def _as_int(x) -> int:
    if isinstance(x, FieldElement):
        if x.field.degree != 1:
            raise TypeError("rational provider received an element of a larger field")
        return abs(int(x.coords[0]))
    return abs(int(x))


@dataclass
class CoefficientProvider:
    rank: int
    field: NumberField
    self_dual: bool = True
    name: str = ""

    def __call__(self, *args) -> complex | float:
        raise NotImplementedError

    def dual(self) -> "CoefficientProvider":
        if self.self_dual:
            return self
        raise NotImplementedError("contragredient coefficients not available")

    def values_by_norm(self, n: np.ndarray) -> np.ndarray:
        """Vectorised A(1, n) (rank 3) or A(n) (rank 2) for positive integers n."""
        raise NotImplementedError

    def pair_values(self, m: int, n: np.ndarray) -> np.ndarray:
        """A(m, n) for rank 3 (A(n) when m = 1); m > 1 needs a rank-3 provider."""
        if m == 1:
            return self.values_by_norm(n)
        raise NotImplementedError(f"{self.name} has no second index")

    def lattice_values(self, coords: np.ndarray) -> np.ndarray:
        """Coefficient at each integer coordinate row (value at the generated ideal)."""
        if self.field.degree != 1:
            raise NotImplementedError(f"{self.name} is only defined over Q")
        return self.values_by_norm(np.abs(np.asarray(coords)[:, 0]))


@dataclass
class DeltaProvider(CoefficientProvider):
    rank: int = 2
    field: NumberField = None  # type: ignore[assignment]
    name: str = "delta"

    def __post_init__(self):
        if self.field is None:
            self.field = load_field("Q")

    def __call__(self, n) -> float:
        return gl2_lambda(_as_int(n))

    def values_by_norm(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.zeros(0)
        return lambda_array(int(n.max()))[n]


@dataclass
class Sym2DeltaProvider(CoefficientProvider):
    rank: int = 3
    field: NumberField = None  # type: ignore[assignment]
    name: str = "sym2delta"

    def __post_init__(self):
        if self.field is None:
            self.field = load_field("Q")

    def __call__(self, m, n=None) -> float:
        if n is None:
            m, n = 1, m
        return gl3_sym2(_as_int(m), _as_int(n))

    def values_by_norm(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.zeros(0)
        return sym2_array(int(n.max()))[n]

    def pair_values(self, m: int, n: np.ndarray) -> np.ndarray:
        return sym2_row(int(m), n)


@dataclass
class ConstantProvider(CoefficientProvider):
    rank: int = 2
    field: NumberField = None  # type: ignore[assignment]
    name: str = "constant"

    def __post_init__(self):
        if self.field is None:
            self.field = load_field("Q")

    def __call__(self, *args) -> float:
        return 1.0

    def values_by_norm(self, n: np.ndarray) -> np.ndarray:
        return np.ones(np.shape(n))

    def pair_values(self, m: int, n: np.ndarray) -> np.ndarray:
        return np.ones(np.shape(n))

    def lattice_values(self, coords: np.ndarray) -> np.ndarray:
        return np.ones(len(coords))


@dataclass
class SyntheticProvider(CoefficientProvider):
    """a(N gamma) with a multiplicative and a(p^k) = sin((k+1)t_p)/sin(t_p), t_p random."""

    rank: int = 2
    field: NumberField = None  # type: ignore[assignment]
    seed: int = 0
    name: str = "synthetic"
    _angles: dict = dc_field(default_factory=dict, repr=False)
    _lock: threading.Lock = dc_field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.field is None:
            self.field = load_field("Q")

    def _angle(self, p: int) -> float:
        t = self._angles.get(p)
        if t is None:
            rng = np.random.default_rng([self.seed, p])
            t = float(rng.uniform(0.0, math.pi))
            with self._lock:
                self._angles.setdefault(p, t)
        return t

    def _norm_value(self, n: int) -> float:
        out = 1.0
        for p, k in factorize(n).items():
            t = self._angle(p)
            out *= math.sin((k + 1) * t) / math.sin(t)
        return out

    def satake(self, p: int) -> tuple[complex, complex]:
        t = self._angle(p)
        return complex(math.cos(t), math.sin(t)), complex(math.cos(t), -math.sin(t))

    def __call__(self, g) -> float:
        if isinstance(g, FieldElement):
            n = abs(int(g.norm))
        else:
            n = abs(int(g))
        if n == 0:
            raise ValueError("coefficient at zero is undefined")
        return self._norm_value(n)

    def values_by_norm(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        cache: dict[int, float] = {}
        out = np.empty(n.shape)
        for i, v in np.ndenumerate(n):
            v = int(v)
            if v not in cache:
                cache[v] = self._norm_value(v)
            out[i] = cache[v]
        return out

    def lattice_values(self, coords: np.ndarray) -> np.ndarray:
        return self.values_by_norm(lattice_norms(self.field, coords))


def lattice_norms(field: NumberField, coords: np.ndarray) -> np.ndarray:
    """|N(gamma)| for integer coordinate rows, via embeddings rounded to integers."""
    emb = np.asarray(coords, dtype=float) @ field.embedding_matrix.T
    mod = np.abs(emb)
    mod[:, field.r1:] **= 2
    return np.rint(np.prod(mod, axis=1)).astype(np.int64)


def make_provider(name: str, field_name: str = "Q", seed: int = 0) -> CoefficientProvider:
    f = load_field(field_name)
    if name in ("delta", "gl2"):
        return DeltaProvider(field=f)
    if name in ("sym2delta", "sym2", "gl3"):
        return Sym2DeltaProvider(field=f)
    if name == "constant":
        return ConstantProvider(field=f)
    if name == "synthetic":
        return SyntheticProvider(field=f, seed=seed)
    raise ValueError(f"unknown provider {name!r}")


# -- checks -------------------------------------------------------------------------------


@dataclass(frozen=True)
class RankinReport:
    X: int
    sum_sq: float
    sum_abs: float

    @property
    def ratio_sq(self) -> float:
        return self.sum_sq / self.X

    @property
    def ratio_abs(self) -> float:
        return self.sum_abs / self.X


def rankin_average(provider: CoefficientProvider, X: float) -> RankinReport:
    X = int(math.floor(X))
    if X < 1:
        raise ValueError("X must be at least 1")
    a = provider.values_by_norm(np.arange(1, X + 1))
    return RankinReport(X, float(np.sum(np.abs(a) ** 2)), float(np.sum(np.abs(a))))


def hecke_violations(m_max: int) -> list[tuple[int, int]]:
    """Pairs (m, n) with tau(m)tau(n) != sum_{d | (m,n)} d^11 tau(mn/d^2)."""
    t = [0] + tau_list(m_max * m_max)
    bad = []
    for m in range(1, m_max + 1):
        for n in range(m, m_max + 1):
            g = math.gcd(m, n)
            rhs = sum(d**11 * t[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
            if t[m] * t[n] != rhs:
                bad.append((m, n))
    return bad
