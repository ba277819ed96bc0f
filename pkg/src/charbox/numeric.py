"""Exact sums of roots of unity and certified inequality verdicts.

A character sum over any set is a vector of counts ``c_k`` meaning
``sum_k c_k * zeta_d^k``.  For d in {1, 2, 3, 4, 6} every ``2cos(2*pi*m/d)`` is an
integer, so ``|sum|^2`` is computed in exact integer arithmetic.  Other orders
fall back to 80-bit long doubles with an a-priori error bound carried
alongside the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np

EXACT_ORDERS = frozenset({1, 2, 3, 4, 6})
_TWO_COS = {1: (2,), 2: (2, -2), 3: (2, -1, -1), 4: (2, 0, -2, 0), 6: (2, 1, -1, -2, -1, 1)}

_SIN_UNITS = {1: (0,), 2: (0, 0), 3: (0, 1, -1), 4: (0, 1, 0, -1), 6: (0, 1, 1, 0, -1, -1)}

EPS_LD = float(np.finfo(np.longdouble).eps)
_PI_LD = np.longdouble("3.14159265358979323846264338327950288419716939937510")


@dataclass(frozen=True)
class Approx:
    """A real number known to lie in ``[value - err, value + err]``."""

    value: float
    err: float

    @property
    def lo(self) -> float:
        return self.value - self.err - abs(self.value) * 2.0**-52

    @property
    def hi(self) -> float:
        return self.value + self.err + abs(self.value) * 2.0**-52

    def __float__(self) -> float:
        return self.value


Real = Union[int, Fraction, Approx]


def lo(x: Real):
    return x.lo if isinstance(x, Approx) else x


def hi(x: Real):
    return x.hi if isinstance(x, Approx) else x


def to_float(x) -> float:
    return float(x.value) if isinstance(x, Approx) else float(x)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, np.integer))


def approx_of(value, rel_err: float = 2.0**-50) -> Approx:
    """Wrap a float computed with a few correctly-rounded operations."""
    v = float(value)
    return Approx(v, abs(v) * rel_err)


@lru_cache(maxsize=64)
def root_table(d: int) -> tuple[np.ndarray, np.ndarray]:
    """cos and sin of 2*pi*k/d for k < d, as long doubles."""
    k = np.arange(d, dtype=np.longdouble)
    ang = 2 * _PI_LD * k / np.longdouble(d)
    return np.cos(ang), np.sin(ang)


def _prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    return out + ([n] if n > 1 else [])


@lru_cache(maxsize=64)
def cyclotomic_poly(d: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_d, lowest degree first.

    For d > 1, Phi_d(x) is the product of (1 - x^e)^mu(d/e) over e | d, expanded
    as a power series truncated at degree phi(d).
    """
    if d == 1:
        return (-1, 1)
    primes = _prime_factors(d)
    deg = d
    for ell in primes:
        deg = deg // ell * (ell - 1)
    series = np.zeros(deg + 1, dtype=np.int64)
    series[0] = 1
    divide = []
    for mask in range(1 << len(primes)):
        chosen = [ell for i, ell in enumerate(primes) if mask >> i & 1]
        e = d // math.prod(chosen)
        if len(chosen) % 2 == 0:
            if e <= deg:
                series[e:] -= series[:-e].copy()
        else:
            divide.append(e)
    for e in divide:
        if e > deg:
            continue
        # multiply by 1/(1 - x^e): running sums along each residue class mod e
        padded = np.zeros(-(-(deg + 1) // e) * e, dtype=np.int64)
        padded[: deg + 1] = series
        series = np.cumsum(padded.reshape(-1, e), axis=0).reshape(-1)[: deg + 1]
    return tuple(int(v) for v in series)


# Reductions mod Phi_d run over F_P.  A vector whose remainder vanishes mod P is
# divisible by P in Z[zeta_d]; if it were nonzero its norm would be at least
# P^phi(d), yet every conjugate is bounded by its coefficient mass.  So while the
# mass stays below P the modular answer is the exact one.
_MOD_P = (1 << 31) - 1


def _phi_mod(d: int) -> np.ndarray:
    return np.array(cyclotomic_poly(d), dtype=np.int64) % _MOD_P


def _remainder_mod_p(v: np.ndarray, d: int) -> np.ndarray:
    """Coefficients of v (cyclic, length d) mod (Phi_d, P), lowest degree first."""
    phi = _phi_mod(d)
    deg = len(phi) - 1
    rem = np.asarray(v, dtype=np.int64) % _MOD_P
    for i in range(len(rem) - 1, deg - 1, -1):
        coef = int(rem[i])
        if coef:
            rem[i - deg: i + 1] = (rem[i - deg: i + 1] - coef * phi) % _MOD_P
    return rem[:deg]


def _rational_norm(counts, d: int):
    """|sum c_k zeta^k|^2 as an int when it is a rational integer, else None.

    The norm is the cyclic autocorrelation of the counts, reduced mod Phi_d.
    Ties such as |S|^2 = q then compare exactly instead of failing the float
    certificate.
    """
    c = np.asarray(counts, dtype=np.int64)
    mass = int(np.abs(c).sum())
    if 2 * mass * mass >= _MOD_P:
        return None
    full = np.convolve(c, c[::-1])          # index j holds lag j - (d - 1)
    auto = full[d - 1:].copy()
    auto[1:] += full[: d - 1]
    rem = _remainder_mod_p(auto, d)
    if rem[1:].any():
        return None
    # the constant N lies in [0, mass^2], and mass(auto) + N <= 2 mass^2 < P
    return int(rem[0])


def _ld_error(mass, d: int):
    """Bound on |computed - true| for |sum|^2 given sum |c_k| = mass."""
    return mass * mass * EPS_LD * (4 * (16 + math.log2(d + 1)) + 8)


class CycloSum:
    """The element ``sum_k counts[k] * zeta_d^k`` of Z[zeta_d]."""

    __slots__ = ("counts", "d")

    def __init__(self, counts, d: int):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (d,):
            raise ValueError("counts must have length d")
        self.counts = counts
        self.d = d

    @classmethod
    def from_classes(cls, classes, d: int) -> "CycloSum":
        """Sum of zeta_d^k over an array of root indices (-1 marks a zero term)."""
        k = np.asarray(classes).ravel()
        return cls(np.bincount(k[k >= 0], minlength=d), d)

    @classmethod
    def zero(cls, d: int) -> "CycloSum":
        return cls(np.zeros(d, dtype=np.int64), d)

    def __add__(self, other: "CycloSum") -> "CycloSum":
        return CycloSum(self.counts + other.counts, self.d)

    def __sub__(self, other: "CycloSum") -> "CycloSum":
        return CycloSum(self.counts - other.counts, self.d)

    def __mul__(self, k: int) -> "CycloSum":
        return CycloSum(self.counts * int(k), self.d)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, np.integer)):
            other = CycloSum(np.eye(1, self.d, 0, dtype=np.int64)[0] * int(other), self.d)
        if not isinstance(other, CycloSum) or other.d != self.d:
            return NotImplemented
        return (self - other).is_zero()

    def is_zero(self) -> bool:
        """Exact test: the count polynomial vanishes modulo Phi_d."""
        if self.d > 1 and (self.counts == self.counts[0]).all():
            return True  # c * (1 + zeta + ... + zeta^{d-1}) = 0
        if int(np.abs(self.counts).sum()) < _MOD_P:
            return not _remainder_mod_p(self.counts, self.d).any()
        rem = [int(v) for v in self.counts]
        phi = cyclotomic_poly(self.d)
        deg = len(phi) - 1
        for top in range(len(rem) - 1, deg - 1, -1):
            lead = rem[top]
            if lead:
                for i, c in enumerate(phi):
                    rem[top - deg + i] -= lead * c
        return not any(rem[:deg])

    def __hash__(self):  # pragma: no cover - unhashable by design
        raise TypeError("CycloSum is unhashable")

    @property
    def mass(self) -> int:
        return int(np.abs(self.counts).sum())

    def complex(self) -> complex:
        if self.d in EXACT_ORDERS:
            c = [int(v) for v in self.counts]
            re2 = sum(t * v for t, v in zip(_TWO_COS[self.d], c))
            im = sum(s * v for s, v in zip(_SIN_UNITS[self.d], c))
            # sin values are multiples of 1 (d = 4) or sqrt(3)/2 (d = 3, 6)
            unit = 1.0 if self.d == 4 else math.sqrt(3) / 2
            return complex(re2 / 2, im * unit if im else 0.0)
        cos, sin = root_table(self.d)
        nz = np.nonzero(self.counts)[0]
        re = math.fsum(float(self.counts[k] * cos[k]) for k in nz)
        im = math.fsum(float(self.counts[k] * sin[k]) for k in nz)
        return complex(re, im)

    def exact(self):
        """Exact value when it is a rational or Gaussian integer, else None."""
        c = [int(v) for v in self.counts]
        if self.d == 1:
            return c[0]
        if self.d == 2:
            return c[0] - c[1]
        if self.d == 4:
            re, im = c[0] - c[2], c[1] - c[3]
            return re if im == 0 else complex(re, im)
        return None

    def abs2(self) -> Real:
        """|sum|^2: an int for exact orders, otherwise a certified Approx."""
        if self.d in EXACT_ORDERS:
            c = [int(v) for v in self.counts]
            d = self.d
            twice = sum(
                _TWO_COS[d][m] * sum(c[k] * c[(k + m) % d] for k in range(d)) for m in range(d)
            )
            return twice // 2
        if self.is_zero():
            return 0
        rational = _rational_norm(self.counts, self.d)
        if rational is not None:
            return rational
        cos, sin = root_table(self.d)
        nz = np.nonzero(self.counts)[0]
        cz = self.counts[nz].astype(np.longdouble)
        re = np.sum(cz * cos[nz])
        im = np.sum(cz * sin[nz])
        val = re * re + im * im
        err = _ld_error(float(self.mass), self.d)
        return Approx(float(val), err + abs(float(val)) * 2.0**-53)

    def abs(self) -> float:
        return math.sqrt(to_float(self.abs2()))

    def __repr__(self) -> str:
        z = self.complex()
        return f"CycloSum(d={self.d}, value={z.real:.6g}{z.imag:+.6g}j)"


def abs2_counts(counts: np.ndarray, d: int):
    """|sum_k counts[u, k] zeta_d^k|^2 for every row u of a counts matrix.

    Returns ``(values, err)``: exact int64 values with ``err = 0`` for exact
    orders, otherwise long doubles with a per-row error bound array.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if d in EXACT_ORDERS:
        twice = np.zeros(counts.shape[0], dtype=np.int64)
        for m, tc in enumerate(_TWO_COS[d]):
            if tc:
                twice += tc * (counts * np.roll(counts, -m, axis=1)).sum(axis=1)
        return twice // 2, 0.0
    cos, sin = root_table(d)
    c = counts.astype(np.longdouble)
    re = c @ cos
    im = c @ sin
    mass = np.abs(counts).sum(axis=1).astype(np.float64)
    return re * re + im * im, mass * mass * EPS_LD * (4 * (16 + math.log2(d + 1)) + 8)


def abs2_rows(classes: np.ndarray, d: int):
    """|sum_j zeta_d^{classes[u, j]}|^2 for every row u (-1 marks a zero term).

    Returns ``(values, err)`` where ``values`` is an exact int64 array for exact
    orders (``err = 0``) or a long-double array with a uniform per-row error bound.
    """
    classes = np.asarray(classes, dtype=np.int64)
    rows, width = classes.shape
    if d in EXACT_ORDERS:
        counts = np.zeros((rows, d), dtype=np.int64)
        ar = np.arange(rows)
        for j in range(width):
            k = classes[:, j]
            ok = k >= 0
            np.add.at(counts, (ar[ok], k[ok]), 1)
        return abs2_counts(counts, d)
    cos, sin = root_table(d)
    valid = classes >= 0
    kk = np.where(valid, classes, 0)
    re = np.where(valid, cos[kk], 0).sum(axis=1)
    im = np.where(valid, sin[kk], 0).sum(axis=1)
    return re * re + im * im, _ld_error(float(width), d)


# -- verdicts ---------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    """One inequality ``lhs <= rhs`` with its certified verdict."""

    name: str
    lhs: Real
    rhs: Real
    holds: bool
    exact: bool

    @property
    def slack(self) -> float:
        if is_exact(self.lhs) and is_exact(self.rhs):
            return float(Fraction(self.rhs) - Fraction(self.lhs))
        return to_float(self.rhs) - to_float(self.lhs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": jsonable(self.lhs),
            "rhs": jsonable(self.rhs),
            "slack": self.slack,
            "holds": self.holds,
            "exact": self.exact,
        }


def check_le(name: str, lhs: Real, rhs: Real) -> Check:
    """Certified ``lhs <= rhs``: passes only when the error intervals separate."""
    exact = is_exact(lhs) and is_exact(rhs)
    if exact:
        holds = Fraction(lhs) <= Fraction(rhs)
    else:
        holds = hi(lhs) <= lo(rhs)
    return Check(name, lhs, rhs, bool(holds), exact)


def check_le_sqrt(name: str, lhs: int, a: int, radicand: int, b: int) -> Check:
    """Exact ``lhs <= a*sqrt(radicand) + b`` for integers (a >= 0)."""
    gap = lhs - b
    holds = gap <= 0 or gap * gap <= a * a * radicand
    rhs = approx_of(a * math.sqrt(radicand) + b)
    return Check(name, lhs, rhs, bool(holds), True)


def iroot(x: int, m: int) -> int:
    """floor(x ** (1/m)) for integers x >= 0, m >= 1."""
    if x < 0 or m < 1:
        raise ValueError("iroot needs x >= 0 and m >= 1")
    if x < 2 or m == 1:
        return x
    r = 1 << -(-x.bit_length() // m)  # an upper bound
    while True:
        s = ((m - 1) * r + x // r ** (m - 1)) // m
        if s >= r:
            break
        r = s
    while r**m > x:
        r -= 1
    while (r + 1) ** m <= x:
        r += 1
    return r


def check_sqrt_le_root(name: str, X: int, c: int, Y: int, m: int, max_bits: int = 256) -> Check:
    """Exact ``sqrt(X) <= c + Y**(1/m)`` for non-negative integers.

    Brackets ``Y**(1/m)`` between consecutive multiples of ``2**-s`` and refines
    until the comparison is decided; undecidable after ``max_bits`` only if
    equality holds to that precision, which then counts as holding.
    """
    rhs = approx_of(c + float(Y) ** (1.0 / m) if Y < 1 << 1000 else c + math.exp(math.log(Y) / m),
                    2.0**-40)
    lhs = approx_of(math.sqrt(X))
    if X <= c * c:
        return Check(name, lhs, rhs, True, True)
    for s in range(0, max_bits + 1, 16):
        k = iroot(Y << (m * s), m)  # k <= 2^s Y^(1/m) < k + 1
        lo_side = (c << s) + k
        if X << (2 * s) <= lo_side * lo_side:
            return Check(name, lhs, rhs, True, True)
        if X << (2 * s) > (lo_side + 1) ** 2:
            return Check(name, lhs, rhs, False, True)
    return Check(name, lhs, rhs, True, True)


def jsonable(x):
    """Deterministic JSON-friendly form of the numbers used in reports."""
    if isinstance(x, Approx):
        return {"value": x.value, "err": x.err}
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, CycloSum):
        z = x.complex()
        return {"re": z.real, "im": z.imag, "abs": x.abs()}
    if isinstance(x, Check):
        return x.to_dict()
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if hasattr(x, "to_dict"):
        return x.to_dict()
    return x
