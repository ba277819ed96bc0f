"""Exact arithmetic in F_p and F_{p^n}.

Elements are integers ``0 <= idx < q`` whose base-``p`` digits are the
coefficients ``c_0, ..., c_{n-1}`` of the polynomial basis ``1, t, ..., t^{n-1}``
(``c_0`` least significant).  Every :class:`FieldCtx` carries a discrete-log
table for a fixed generator, so multiplication is a table lookup.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, InputError

DEFAULT_CAP = 1 << 26
MAX_DEGREE = 12


def q_cap() -> int:
    """The field-size cap, overridable through ``CHARBOX_CAP``."""
    raw = os.environ.get("CHARBOX_CAP")
    if raw is None:
        return DEFAULT_CAP
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"CHARBOX_CAP must be an integer, got {raw!r}") from None


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation by trial division (n is at most a field size)."""
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def smallest_prime_divisor(n: int) -> int:
    if n < 2:
        raise InputError("n must be at least 2")
    return min(factorize(n))


# -- polynomials over F_p: coefficient lists, lowest degree first ------------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _trim([c % p for c in out])


def _pmod(a: list[int], f: list[int], p: int) -> list[int]:
    """Remainder of ``a`` modulo the monic polynomial ``f``."""
    a = _trim([c % p for c in a])
    deg_f = len(f) - 1
    while len(a) - 1 >= deg_f:
        lead, shift = a[-1], len(a) - 1 - deg_f
        for i, fi in enumerate(f):
            a[shift + i] = (a[shift + i] - lead * fi) % p
        _trim(a)
    return a


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        inv = pow(b[-1], -1, p)
        b = [c * inv % p for c in b]
        a, b = b, _pmod(a, b, p)
    return a


def _ppowmod(base: list[int], e: int, f: list[int], p: int) -> list[int]:
    result, base = [1], _pmod(base, f, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), f, p)
        base = _pmod(_pmul(base, base, p), f, p)
        e >>= 1
    return result


def is_irreducible(f: tuple[int, ...] | list[int], p: int) -> bool:
    """Ben-Or test: monic ``f`` of degree n is irreducible over F_p iff
    gcd(t^{p^k} - t, f) = 1 for every k <= n/2."""
    f = list(f)
    n = len(f) - 1
    if n < 1 or f[-1] % p != 1:
        return False
    if n == 1:
        return True
    x = [0, 1]
    frob = x
    for _ in range(1, n // 2 + 1):
        frob = _ppowmod(frob, p, f, p)
        diff = list(frob) + [0] * max(0, 2 - len(frob))
        diff[1] = (diff[1] - 1) % p
        if len(_pgcd(f, _trim(diff), p)) > 1:
            return False
    return True


def _check_params(p: int, n: int, cap: int | None) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise InputError(f"p={p!r} is not prime")
    if not 1 <= n <= MAX_DEGREE:
        raise InputError(f"degree n={n} outside [1, {MAX_DEGREE}]")
    q = p**n
    limit = q_cap() if cap is None else cap
    if q > limit:
        raise BudgetExceeded(f"q = {p}^{n} = {q} exceeds the field cap {limit}")
    return q


def find_irreducible(p: int, n: int, cap: int | None = None) -> tuple[int, ...]:
    """Smallest monic irreducible polynomial of degree ``n`` over F_p.

    Candidates are ordered by the integer whose base-``p`` digits are the
    lower coefficients, constant term least significant.  Returned as the
    full coefficient vector ``(c_0, ..., c_{n-1}, 1)``.
    """
    _check_params(p, n, cap)
    for code in range(p**n):
        low = [(code // p**i) % p for i in range(n)]
        f = tuple(low + [1])
        if is_irreducible(f, p):
            return f
    raise AssertionError("no irreducible polynomial found")  # unreachable


def _raw_mul(a: list[int], b: list[int], f: list[int], p: int) -> list[int]:
    return _pmod(_pmul(a, b, p), f, p)


def _digits(idx: int, p: int, n: int) -> list[int]:
    return [(idx // p**i) % p for i in range(n)]


def _undigits(c: list[int], p: int) -> int:
    return sum((ci % p) * p**i for i, ci in enumerate(c))


def _smallest_generator(p: int, modulus: tuple[int, ...]) -> int:
    n = len(modulus) - 1
    q = p**n
    if q == 2:
        return 1
    f = list(modulus)
    primes = list(factorize(q - 1))
    # prime-field elements have order dividing p - 1 < q - 1 once n > 1
    for cand in range(1 if n == 1 else p, q):
        c = _trim(_digits(cand, p, n))
        if all(_ppowmod(c, (q - 1) // ell, f, p) != [1] for ell in primes):
            return cand
    raise AssertionError("multiplicative group has no generator")  # unreachable


def _matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    # n * p^2 < 2^63 whenever p^n <= 2^26, so int64 accumulation is exact
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for j in range(a.shape[1]):
        out += a[:, j, None] * b[j]
        out %= p
    return out


def _build_tables(p: int, n: int, modulus: tuple[int, ...], g: int):
    q = p**n
    weights = np.array([p**i for i in range(n)], dtype=np.int64)
    f = list(modulus)
    gc = _trim(_digits(g, p, n))
    # row j: coordinates of t^j * g, so (coords @ G) multiplies by g
    G = np.zeros((n, n), dtype=np.int64)
    for j in range(n):
        tj = [0] * j + [1]
        G[j, :] = _digits(_undigits(_raw_mul(tj, gc, f, p), p), p, n)
    block = min(q - 1, 1 << 20)
    first = np.zeros((block, n), dtype=np.int64)
    first[0, 0] = 1
    filled, power = 1, G.copy()
    while filled < block:  # rows [k, 2k) = rows [0, k) times g^k
        take = min(filled, block - filled)
        first[filled:filled + take] = _matmul_mod(first[:take], power, p)
        power = _matmul_mod(power, power, p)
        filled += take
    step, base, e = np.eye(n, dtype=np.int64), G.copy(), block
    while e:
        if e & 1:
            step = _matmul_mod(step, base, p)
        base = _matmul_mod(base, base, p)
        e >>= 1
    exp = np.empty(q - 1, dtype=np.int64)
    cur = first
    for start in range(0, q - 1, block):
        stop = min(start + block, q - 1)
        exp[start:stop] = cur[: stop - start] @ weights
        if stop < q - 1:
            cur = _matmul_mod(cur, step, p)
    dlog = np.full(q, -1, dtype=np.int64)
    dlog[exp] = np.arange(q - 1, dtype=np.int64)
    if (dlog[1:] < 0).any():
        raise AssertionError("generator tables are not a bijection")
    return exp, dlog, weights


@dataclass(frozen=True, eq=False)
class FieldCtx:
    """The field F_{p^n} with a fixed modulus, generator and log tables.

    Immutable after construction; every method is a pure function of its
    arguments, so one context can be shared freely between workers.
    """

    p: int
    n: int
    modulus: tuple[int, ...]
    g: int
    exp: np.ndarray = field(repr=False)
    dlog: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, p: int, n: int, modulus=None, cap: int | None = None) -> "FieldCtx":
        _check_params(p, n, cap)
        if modulus is None:
            modulus = find_irreducible(p, n, cap)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != n + 1 or modulus[-1] != 1:
            raise InputError("modulus must be monic of degree n")
        if not is_irreducible(modulus, p):
            raise InputError(f"modulus {modulus} is reducible over F_{p}")
        g = _smallest_generator(p, modulus)
        exp, dlog, weights = _build_tables(p, n, modulus, g)
        return cls(p, n, modulus, g, exp, dlog, weights)

    @property
    def q(self) -> int:
        return self.p**self.n

    @property
    def order(self) -> int:
        """Order of the multiplicative group, q - 1."""
        return self.p**self.n - 1

    def __repr__(self) -> str:
        return f"FieldCtx(p={self.p}, n={self.n}, modulus={self.modulus}, g={self.g})"

    # -- representation -------------------------------------------------------

    def coords(self, x):
        """Coefficient vectors (last axis) of element indices."""
        x = np.asarray(x, dtype=np.int64)
        return (x[..., None] // self.weights) % self.p

    def index(self, coords):
        c = np.asarray(coords, dtype=np.int64) % self.p
        return c @ self.weights

    def element(self, coeffs) -> int:
        """Index of ``sum coeffs[i] t^i`` (coefficients reduced mod p)."""
        coeffs = list(coeffs) + [0] * (self.n - len(coeffs))
        if len(coeffs) > self.n:
            raise InputError("too many coefficients for this field")
        return int(self.index(coeffs))

    def check(self, x) -> None:
        arr = np.asarray(x)
        if ((arr < 0) | (arr >= self.q)).any():
            raise InputError(f"element index out of range [0, {self.q})")

    # -- arithmetic (vectorised; scalars in, numpy scalars out) ----------------

    def add(self, a, b):
        return self.index(self.coords(a) + self.coords(b))

    def sub(self, a, b):
        return self.index(self.coords(a) - self.coords(b))

    def neg(self, a):
        return self.index(-self.coords(a))

    def scale(self, a, c: int):
        """Multiply by the prime-field scalar ``c``."""
        return self.index(self.coords(a) * (c % self.p))

    def add_scalar(self, a, c):
        """a + c for integer(s) c in the prime field: only digit 0 changes."""
        a = np.asarray(a, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        d0 = a % self.p
        return a - d0 + (d0 + c) % self.p

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        k = (self.dlog[a] + self.dlog[b]) % self.order
        return np.where((a == 0) | (b == 0), 0, self.exp[k])

    def div(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if (b == 0).any():
            raise InputError("division by zero")
        k = (self.dlog[a] - self.dlog[b]) % self.order
        return np.where(a == 0, 0, self.exp[k])

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if (a == 0).any():
            raise InputError("zero has no multiplicative inverse")
        return self.exp[(-self.dlog[a]) % self.order]

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        if e < 0 and (a == 0).any():
            raise InputError("zero has no multiplicative inverse")
        k = (self.dlog[a] * (e % self.order)) % self.order
        return np.where(a == 0, 0, self.exp[k])

    def mul_schoolbook(self, a: int, b: int) -> int:
        """Multiplication by polynomial reduction, independent of the tables."""
        r = _raw_mul(_trim(_digits(a, self.p, self.n)), _trim(_digits(b, self.p, self.n)),
                     list(self.modulus), self.p)
        return _undigits(r, self.p)

    # -- structure -------------------------------------------------------------

    def subfield_degree(self, x):
        """Smallest s | n with x in F_{p^s} (vectorised; 1 for x = 0)."""
        x = np.asarray(x, dtype=np.int64)
        out = np.full(x.shape, self.n, dtype=np.int64)
        dl = self.dlog[x]
        for s in reversed(divisors(self.n)[:-1]):
            step = self.order // (self.p**s - 1)
            out = np.where((x != 0) & (dl % step == 0), s, out)
        return np.where(x == 0, 1, out)

    def subfield_elements(self, s: int) -> np.ndarray:
        """All elements of F_{p^s}, ascending index."""
        if self.n % s:
            raise InputError(f"{s} does not divide n={self.n}")
        step = self.order // (self.p**s - 1)
        return np.sort(np.concatenate([[0], self.exp[::step]]))

    def prime_field_mask(self, x):
        return self.subfield_degree(x) == 1

    def format(self, x: int) -> str:
        c = _digits(int(x), self.p, self.n)
        terms = []
        for i in reversed(range(self.n)):
            if c[i] == 0:
                continue
            mono = "" if i == 0 else ("t" if i == 1 else f"t^{i}")
            coef = str(c[i]) if (c[i] != 1 or i == 0) else ""
            terms.append(coef + mono)
        return "+".join(terms) if terms else "0"


# -- function-style aliases ------------------------------------------------------

def element_mul(ctx: FieldCtx, a: int, b: int) -> int:
    return int(ctx.mul(a, b))


def element_inv(ctx: FieldCtx, a: int) -> int:
    return int(ctx.inv(a))


def find_generator(ctx: FieldCtx) -> int:
    """Smallest index whose order is q - 1, found by schoolbook powering."""
    return _smallest_generator(ctx.p, ctx.modulus)


def build_dlog(ctx: FieldCtx) -> np.ndarray:
    """The discrete-log table; entry 0 is -1 (zero has no logarithm)."""
    return ctx.dlog


def subfield_degree(ctx: FieldCtx, x: int) -> int:
    return int(ctx.subfield_degree(x))


def get_field(p: int, n: int, modulus: tuple[int, ...] | None = None,
              cap: int | None = None) -> FieldCtx:
    """Cached field construction; the cap is checked on every call."""
    _check_params(p, n, cap)
    return _cached_field(p, n, None if modulus is None else tuple(modulus))


@lru_cache(maxsize=32)
def _cached_field(p: int, n: int, modulus) -> FieldCtx:
    return FieldCtx.build(p, n, modulus, cap=p**n)


_TERM = re.compile(r"^([+-]?)(\d*)\*?(t(?:\^(\d+))?)?$")


def parse_element(ctx: FieldCtx, text: str) -> int:
    """Parse ``"3"``, ``"t"``, ``"2t^2-t+1"`` or ``"#17"`` (raw index)."""
    s = text.replace(" ", "")
    if not s:
        raise InputError("empty element")
    if s.startswith("#"):
        idx = int(s[1:])
        ctx.check(idx)
        return idx
    coeffs = [0] * ctx.n
    for term in re.findall(r"[+-]?[^+-]+", s):
        m = _TERM.match(term)
        if not m or (not m.group(2) and not m.group(3)):
            raise InputError(f"cannot parse element term {term!r}")
        sign = -1 if m.group(1) == "-" else 1
        coef = int(m.group(2)) if m.group(2) else 1
        deg = 0 if not m.group(3) else int(m.group(4) or 1)
        if deg >= ctx.n:
            raise InputError(f"t^{deg} not reduced: degree must be < n={ctx.n}")
        coeffs[deg] += sign * coef
    return ctx.element(coeffs)

