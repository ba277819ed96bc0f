"""Multiplicative characters of F_{p^n}.

``chi_m(g^k) = exp(2*pi*i*m*k/(q-1))`` for the context's generator g.  Values are
kept as root-of-unity indices; ``chi.classes(x)`` returns ``k`` in ``[0, d)``
meaning ``zeta_d^k`` (d the order of chi) and -1 for x = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .errors import BudgetExceeded, InputError
from .field import FieldCtx
from .numeric import EXACT_ORDERS, CycloSum, Approx, abs2_rows, EPS_LD


@dataclass(frozen=True, eq=False)
class Character:
    ctx: FieldCtx
    m: int

    def __post_init__(self):
        object.__setattr__(self, "m", int(self.m) % self.ctx.order)

    @classmethod
    def of_order(cls, ctx: FieldCtx, d: int, k: int = 1) -> "Character":
        """The character ``chi_{k(q-1)/d}``; requires d | q-1 and gcd(k, d) = 1."""
        if d < 1 or ctx.order % d:
            raise InputError(f"no character of order {d}: it does not divide q-1={ctx.order}")
        if gcd(k, d) != 1:
            raise InputError(f"k={k} is not a unit mod {d}")
        return cls(ctx, k * (ctx.order // d))

    @classmethod
    def from_config(cls, ctx: FieldCtx, m: int, generator: int | None = None) -> "Character":
        """Character named by ``(generator, m)``: chi(generator) = exp(2 pi i m/(q-1))."""
        if generator is None or generator == ctx.g:
            return cls(ctx, m)
        a = int(ctx.dlog[generator])
        if a < 0 or gcd(a, ctx.order) != 1:
            raise InputError(f"element {generator} is not a generator of F_q^*")
        # dlog_{g'}(x) = dlog_g(x) / a
        return cls(ctx, m * pow(a, -1, ctx.order))

    @property
    def order(self) -> int:
        return self.ctx.order // gcd(self.m, self.ctx.order)

    @property
    def is_trivial(self) -> bool:
        return self.m == 0

    @property
    def _unit(self) -> int:
        return self.m // (self.ctx.order // self.order)

    def classes(self, x) -> np.ndarray:
        """Root indices k (chi(x) = zeta_d^k) for element indices x; -1 at zero."""
        x = np.asarray(x, dtype=np.int64)
        dl = self.ctx.dlog[x]
        d = self.order
        return np.where(x == 0, -1, (dl % d) * self._unit % d)

    def exponents(self, x) -> np.ndarray:
        """m * dlog(x) mod (q-1), the index of chi(x) among (q-1)-th roots; -1 at zero."""
        x = np.asarray(x, dtype=np.int64)
        dl = self.ctx.dlog[x]
        return np.where(x == 0, -1, (dl * self.m) % self.ctx.order)

    def value(self, x) -> complex:
        k = int(self.classes(x))
        if k < 0:
            return 0j
        return complex(np.exp(2j * np.pi * k / self.order))

    def sum(self, xs) -> CycloSum:
        return CycloSum.from_classes(self.classes(xs), self.order)

    def restriction_is_trivial(self, s: int) -> bool:
        return restriction_is_trivial(self, s)

    def to_dict(self) -> dict:
        return {"p": self.ctx.p, "n": self.ctx.n, "generator": self.ctx.g, "m": self.m,
                "order": self.order}


def char_eval(chi: Character, x: int) -> int | None:
    """Exponent e with chi(x) = exp(2 pi i e/(q-1)), or None for x = 0."""
    e = int(chi.exponents(x))
    return None if e < 0 else e


def char_order(chi: Character) -> int:
    return chi.order


def restriction_is_trivial(chi: Character, s: int) -> bool:
    """Whether chi is identically 1 on F_{p^s}^*.

    F_{p^s}^* is generated by g^{(q-1)/(p^s-1)}, so the test is a single congruence.
    """
    ctx = chi.ctx
    if s < 1 or ctx.n % s:
        raise InputError(f"s={s} does not divide n={ctx.n}")
    return (ctx.order // (ctx.p**s - 1)) * chi.m % ctx.order == 0


def interval_moment(chi: Character, interval: tuple[int, int], r: int,
                    chunk: int = 1 << 16, budget: int = 10**9):
    """``sum_{u in F_q} |sum_{z in I} chi(u + z)|^{2r}`` for the integer interval I.

    Exact integer for orders in {1, 2, 3, 4, 6}; otherwise an :class:`Approx`
    whose error bound covers every long-double rounding.
    """
    a, b = interval
    if b < a:
        raise InputError("empty interval")
    if r < 1:
        raise InputError("r must be positive")
    ctx = chi.ctx
    width = b - a + 1
    if ctx.q * width > budget:
        raise BudgetExceeded(f"moment needs {ctx.q * width} evaluations (budget {budget})")
    zs = np.arange(a, b + 1, dtype=np.int64) % ctx.p
    d = chi.order
    exact = d in EXACT_ORDERS
    big = width ** (2 * r) * ctx.q >= 1 << 62
    total = 0 if exact else np.longdouble(0)
    for start in range(0, ctx.q, chunk):
        u = np.arange(start, min(start + chunk, ctx.q), dtype=np.int64)
        cls = chi.classes(ctx.add_scalar(u[:, None], zs[None, :]))
        vals, _ = abs2_rows(cls, d)
        if exact:
            if big:
                total += sum(int(v) ** r for v in vals.tolist())
            else:
                total += int((vals**r).sum())
        else:
            total += (vals**r).sum()
    if exact:
        return int(total)
    # per-term |S|^2 error plus powering and accumulation roundings
    per_row = width**2 * EPS_LD * (4 * (16 + np.log2(d + 1)) + 8)
    mag = float(width) ** (2 * r)
    err = ctx.q * (r * mag / width**2 * per_row * 1.01 + mag * EPS_LD * (2 * r + np.log2(ctx.q) + 2))
    val = float(total)
    return Approx(val, float(err) + abs(val) * 2.0**-53)
