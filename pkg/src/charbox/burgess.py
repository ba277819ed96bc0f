"""Burgess amplification for short boxes, with every inequality checked exactly.

The sum over B is compared with its average over shifts ``x -> x + yz``
(y in a small box B0, z in an interval I), then the averaged sum is bounded
through the multiplicity profile ``omega(u) = #{(x, y) : x / y = u}`` and the
interval moment ``C = sum_u |sum_{z in I} chi(u + z)|^{2r}``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .boxes import BoxSpec, box_char_sum, grid_points
from .chars import Character, interval_moment
from .energy import energy_bruteforce
from .errors import BudgetExceeded, DegenerateShiftError, PreconditionError, RoutingError
from .numeric import (
    Approx, Check, CycloSum, abs2_rows, approx_of, check_le, check_le_sqrt,
    check_sqrt_le_root, iroot, is_exact, jsonable, to_float,
)

R_CAP = 6
POINT_BUDGET = 5 * 10**7


def choose_r(n: int, epsilon: float) -> int:
    """Closest integer to n / epsilon (halves round up), capped at R_CAP."""
    if epsilon <= 0:
        raise PreconditionError("epsilon must be positive")
    return max(1, min(R_CAP, math.floor(n / epsilon + 0.5)))


def _as_fraction(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def ceil_power(p: int, delta: Fraction) -> int:
    """ceil(p ** delta) for rational delta >= 0, exactly."""
    a, b = delta.numerator, delta.denominator
    k = iroot(p**a, b)
    return k if k**b == p**a else k + 1


def floor_scaled(h: int, p: int, delta: Fraction) -> int:
    """floor(h * p ** (-2 delta)) exactly: the largest k with (k^b) p^(2a) <= h^b."""
    a, b = delta.numerator, delta.denominator
    return iroot(h**b // p ** (2 * a), b)


@dataclass
class BurgessReport:
    p: int
    n: int
    H: tuple[int, ...]
    epsilon: float
    epsilon_box: float
    delta: Fraction
    r: int
    interval: tuple[int, int]
    shift_sides: tuple[int, ...]
    size: int
    shift_size: int
    S: CycloSum = field(repr=False)
    T: CycloSum = field(repr=False)
    fi_residual: float
    fi_bound: float
    symdiff_bound: Fraction
    A: int
    Bq: int
    omega_zero: int
    omega_support: int
    C: int | Approx
    E_B: int
    E_B0: int
    ti_lhs: float
    ti_middle: float
    ti_rhs: float
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def fi_holds(self) -> bool:
        return self._holds("FI")

    @property
    def ti_holds(self) -> bool:
        return self._holds("TI")

    def _holds(self, prefix: str) -> bool:
        return all(c.holds for c in self.checks if c.name.startswith(prefix))

    def to_dict(self) -> dict:
        logp = math.log(self.p)
        return jsonable({
            "p": self.p, "n": self.n, "H": list(self.H), "epsilon": self.epsilon,
            "epsilon_box": self.epsilon_box, "delta": str(self.delta), "r": self.r,
            "interval": list(self.interval), "shift_sides": list(self.shift_sides),
            "size": self.size, "shift_size": self.shift_size,
            "S": self.S, "T": self.T,
            "fi_residual": self.fi_residual, "fi_bound": self.fi_bound,
            "symdiff_bound": float(self.symdiff_bound),
            "A": self.A, "Bq": self.Bq, "omega_zero": self.omega_zero,
            "omega_support": self.omega_support, "C": self.C,
            "E_B": self.E_B, "E_B0": self.E_B0,
            "Bq_ratio": self.Bq / (self.size * self.shift_size * logp**self.n),
            "ti_lhs": self.ti_lhs, "ti_middle": self.ti_middle, "ti_rhs": self.ti_rhs,
            "fi_holds": self.fi_holds, "ti_holds": self.ti_holds,
            "checks": self.checks,
        })


def _symdiff(H, c, p) -> int:
    """|B symmetric-difference (B + c)| for a box of residue intervals, shift c."""
    size, inter = 1, 1
    for h, ci in zip(H, c):
        ci %= p
        size *= h
        inter *= max(0, h - ci) + max(0, h - (p - ci))
    return 2 * (size - inter)


def burgess_pipeline(box: BoxSpec, chi: Character, epsilon: float,
                     r_override: int | None = None, delta_override=None,
                     budget: int = POINT_BUDGET) -> BurgessReport:
    ctx = box.ctx
    p, n = ctx.p, ctx.n
    if chi.is_trivial:
        raise PreconditionError("the amplification needs a nontrivial character")
    if 2 * max(box.H) ** 2 >= p:
        raise RoutingError(f"max side {max(box.H)} is not below sqrt(p/2); use the long-edge routes")
    r = int(r_override) if r_override is not None else choose_r(n, epsilon)
    if r < 1:
        raise PreconditionError("r must be positive")
    delta = _as_fraction(delta_override) if delta_override is not None else Fraction(n, 2 * r)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    K = ceil_power(p, delta)
    sides = tuple(floor_scaled(h, p, delta) for h in box.H)
    if not any(sides):
        raise DegenerateShiftError("shift box degenerate: every side floor(p^(-2 delta) H_i) is 0")
    size = box.size
    shift_coords = np.array(np.meshgrid(*[np.arange(m + 1) for m in sides], indexing="ij"))
    shift_coords = shift_coords.reshape(n, -1).T  # |B0| x n, row 0 is the zero vector
    n_shift = len(shift_coords)
    if size * n_shift * K > budget:
        raise BudgetExceeded(f"{size * n_shift * K} shifted evaluations exceed budget {budget}")

    S = box_char_sum(box, chi).total
    # the shift yz has coordinates y_i * z; tally how often each coordinate shift occurs
    shifts = Counter(tuple(int(v) * z for v in y) for y in shift_coords for z in range(1, K + 1))
    T = CycloSum.zero(chi.order)
    sd_total = 0
    for c, mult in sorted(shifts.items()):
        ranges = [rg + ci for rg, ci in zip(box.ranges(), c)]
        T = T + chi.sum(grid_points(box.basis, ranges)) * mult
        sd_total += mult * _symdiff(box.H, c, p)
    KK = n_shift * K
    diff = S * KK - T
    diff2 = diff.abs2()

    pdelta = float(p) ** float(delta)
    fi_rhs = 6 * size * KK / pdelta
    checks = [
        check_le("FI: |S - avg| <= 6 p^-delta |B|", diff2, approx_of(fi_rhs**2, 2.0**-44)),
        check_le("counting: |S - avg| <= mean |B sym-diff (B + yz)|", diff2, sd_total**2),
    ]

    # omega over B x (B0 \ {0})
    pts = box.points()
    ys = grid_points(box.basis, [np.arange(m + 1) for m in sides])[1:]
    ys = ys[ys != 0]
    ratios = ctx.div(pts[:, None], ys[None, :]).ravel()
    u, w = np.unique(ratios, return_counts=True)
    A = int(w.sum())
    Bq = int((w.astype(object) ** 2).sum())
    omega_zero = int(w[u == 0].sum())
    bq_nonzero = Bq - omega_zero**2
    B0_set = grid_points(box.basis, [np.arange(m + 1) for m in sides])
    E_B = energy_bruteforce(ctx, pts)
    E_B0 = energy_bruteforce(ctx, B0_set)
    checks += [
        check_le("A <= |B||B0|", A, size * n_shift),
        check_le("omega(0) <= |B0|", omega_zero, n_shift),
        Check("sum omega = |B|(|B0| - 1)", A, size * (n_shift - 1), A == size * (n_shift - 1), True),
        check_le("FoI: (sum_{u!=0} omega^2)^2 <= E(B) E(B0)", bq_nonzero**2, E_B * E_B0),
    ]

    C = interval_moment(chi, (1, K), r)
    q = ctx.q
    if is_exact(C):
        checks.append(check_le_sqrt("WL: C <= 2r q^(1/2) |I|^2r + q |I|^r r^2r", C,
                                    2 * r * K ** (2 * r), q, q * K**r * r ** (2 * r)))
    else:
        wl = 2 * r * math.sqrt(q) * K ** (2 * r) + q * K**r * r ** (2 * r)
        checks.append(check_le("WL: C <= 2r q^(1/2) |I|^2r + q |I|^r r^2r", C, approx_of(wl, 2.0**-48)))

    # per-u inner sums for the triangle step
    zs = np.arange(1, K + 1)
    inner, inner_err = abs2_rows(chi.classes(ctx.add_scalar(u[:, None], zs[None, :])), chi.order)
    inner_abs = np.sqrt(np.asarray(inner, dtype=np.float64))
    middle = math.fsum((w * inner_abs).tolist()) + size * K
    T2 = T.abs2()
    ti_lhs = math.sqrt(to_float(T2))
    c = size * K
    if is_exact(C) and is_exact(T2):
        Y = A ** (2 * r - 2) * Bq * C
        ti = check_sqrt_le_root("TI: |T| <= A^(1-1/r) Bq^(1/2r) C^(1/2r) + |B||I|", int(T2), c, Y, 2 * r)
        ti_rhs = to_float(ti.rhs)
    else:
        logs = (2 * r - 2) * math.log(A) + math.log(Bq) + math.log(C.value if isinstance(C, Approx) else C)
        ti_rhs = math.exp(logs / (2 * r)) + c
        c_rel = (C.err / C.value) if isinstance(C, Approx) and C.value else 0.0
        rhs = Approx(ti_rhs, (ti_rhs - c) * (c_rel / (2 * r) + 2.0**-44))
        lhs = approx_of(ti_lhs, 2.0**-44) if is_exact(T2) else Approx(ti_lhs, math.sqrt(T2.err) + ti_lhs * 2.0**-50)
        ti = check_le("TI: |T| <= A^(1-1/r) Bq^(1/2r) C^(1/2r) + |B||I|", lhs, rhs)
    checks.append(ti)
    mid_err = float(np.max(inner_err)) ** 0.5 * A if np.ndim(inner_err) else math.sqrt(inner_err) * A
    mid = Approx(middle, mid_err + middle * 2.0**-44)
    checks.append(check_le("TI triangle: |T| <= sum omega |S_u| + |B||I|",
                           approx_of(ti_lhs, 2.0**-44), mid))
    checks.append(check_le("TI holder: sum omega |S_u| + |B||I| <= rhs", mid, approx_of(ti_rhs, 2.0**-40)))

    eps_box = math.log(size, p) / n - 0.25
    return BurgessReport(
        p=p, n=n, H=box.H, epsilon=float(epsilon), epsilon_box=eps_box, delta=delta, r=r,
        interval=(1, K), shift_sides=sides, size=size, shift_size=n_shift, S=S, T=T,
        fi_residual=math.sqrt(to_float(diff2)) / KK, fi_bound=6 * size / pdelta,
        symdiff_bound=Fraction(sd_total, KK), A=A, Bq=Bq, omega_zero=omega_zero,
        omega_support=len(u), C=C, E_B=E_B, E_B0=E_B0, ti_lhs=ti_lhs, ti_middle=middle,
        ti_rhs=ti_rhs, checks=checks,
    )
