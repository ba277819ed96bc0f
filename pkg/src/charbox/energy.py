"""Multiplicative energy of boxes and the ratio-set decomposition behind its bound.

Two independent routes to ``E(A) = #{(a, b, c, d) in A^4 : ab = cd}``:

* :func:`energy_bruteforce` histograms all ``|A|^2`` products.
* :func:`energy_via_ratios` counts, for every ``z``, the pairs ``(x, y)`` of
  nonzero elements with ``xz = y``.  In log coordinates that is the cyclic
  autocorrelation of the indicator of ``dlog(A \\ {0})``, and
  ``E = sum_z f(z)^2 + [0 in A] (2|A| - 1)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boxes import BoxSpec, grid_points
from .errors import BudgetExceeded, PreconditionError
from .field import FieldCtx
from .numeric import Check, check_le

PAIR_CAP = 2 * 10**4
DIRECT_PAIRS = 4 * 10**6
FFT_CAP = 1 << 24


def _as_set(ctx: FieldCtx, A) -> np.ndarray:
    A = np.unique(np.asarray(A, dtype=np.int64).ravel())
    ctx.check(A)
    return A


def product_histogram(ctx: FieldCtx, A, cap: int = PAIR_CAP) -> dict[int, int]:
    """r(u) = #{(a, b) in A^2 : ab = u} as a sparse map (u = 0 included)."""
    A = _as_set(ctx, A)
    if len(A) > cap:
        raise BudgetExceeded(f"|A| = {len(A)} exceeds the pair cap {cap}")
    counts: dict[int, int] = {}
    step = max(1, DIRECT_PAIRS // max(len(A), 1))
    keys, vals = [], []
    for start in range(0, len(A), step):
        prod = ctx.mul(A[start:start + step, None], A[None, :]).ravel()
        k, v = np.unique(prod, return_counts=True)
        keys.append(k)
        vals.append(v)
    if keys:
        k = np.concatenate(keys)
        v = np.concatenate(vals)
        order = np.argsort(k, kind="stable")
        k, v = k[order], v[order]
        uniq, first = np.unique(k, return_index=True)
        sums = np.add.reduceat(v, first)
        counts = dict(zip(uniq.tolist(), sums.tolist()))
    return counts


def energy_bruteforce(ctx: FieldCtx, A, cap: int = PAIR_CAP) -> int:
    """Exact E(A) from the product histogram."""
    return sum(c * c for c in product_histogram(ctx, A, cap).values())


def ratio_counts(ctx: FieldCtx, A) -> np.ndarray:
    """R[k] = #{(x, y) in (A \\ {0})^2 : dlog(y) - dlog(x) = k mod (q-1)}."""
    A = _as_set(ctx, A)
    logs = ctx.dlog[A[A != 0]]
    m = ctx.order
    if len(logs) ** 2 <= DIRECT_PAIRS:
        diff = (logs[None, :] - logs[:, None]) % m
        return np.bincount(diff.ravel(), minlength=m)
    if m > FFT_CAP:
        raise BudgetExceeded(f"ratio autocorrelation over q-1 = {m} exceeds {FFT_CAP}")
    ind = np.zeros(m, dtype=np.float64)
    ind[logs] = 1.0
    freq = np.fft.rfft(ind)
    raw = np.fft.irfft(freq * np.conj(freq), n=m)
    out = np.rint(raw).astype(np.int64)
    # each entry is an integer <= |A|; the float error is orders of magnitude below 1/4
    if np.abs(raw - out).max() >= 0.25 or out.sum() != len(logs) ** 2 or (out < 0).any():
        raise ArithmeticError("FFT autocorrelation failed its integrality guard")
    return out


def energy_from_ratios(ctx: FieldCtx, A) -> int:
    A = _as_set(ctx, A)
    R = ratio_counts(ctx, A)
    zero = (2 * len(A) - 1) ** 2 if (A == 0).any() else 0
    return int((R.astype(object) ** 2).sum()) + zero if len(R) else zero


def symmetric_box(box: BoxSpec) -> np.ndarray:
    """``B_0 = {sum x_i w_i : |x_i| <= H_i}`` as a set of element indices."""
    ranges = [np.arange(-h, h + 1, dtype=np.int64) for h in box.H]
    return np.unique(grid_points(box.basis, ranges))


@dataclass
class EnergyReport:
    p: int
    n: int
    H: tuple[int, ...]
    size: int
    E: int
    E_bruteforce: int
    contains_zero: bool
    r_profile: dict[int, int] = field(repr=False)
    f_profile: dict[int, int] = field(repr=False)
    f0_profile: dict[int, int] = field(repr=False)
    Zprime_size: int
    Z_size: int
    Zprime_minus_Z: int
    sum_f2: int
    sum_f0_2: int
    L1: int
    L2: int
    checks: list[Check]

    @property
    def kl_ratio(self) -> float:
        return self.E / (self.size**2 * math.log(self.p) ** self.n)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def summary(self) -> dict:
        return {
            "p": self.p, "n": self.n, "H": list(self.H), "size": self.size,
            "E": self.E, "E_bruteforce": self.E_bruteforce,
            "Zprime_size": self.Zprime_size, "Z_size": self.Z_size,
            "Zprime_minus_Z": self.Zprime_minus_Z, "sum_f2": self.sum_f2,
            "sum_f0_2": self.sum_f0_2, "L1": self.L1, "L2": self.L2,
            "kl_ratio": self.kl_ratio, "log": "natural",
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_dict(self) -> dict:
        out = self.summary()
        out["f_profile"] = {str(k): v for k, v in sorted(self.f_profile.items())}
        out["f0_profile"] = {str(k): v for k, v in sorted(self.f0_profile.items())}
        return out


def _profile(ctx: FieldCtx, R: np.ndarray, plus: int) -> dict[int, int]:
    """Map z -> R[dlog z] + plus over the support of R (z = g^k)."""
    ks = np.nonzero(R)[0]
    return dict(zip(ctx.exp[ks].tolist(), (R[ks] + plus).tolist()))


def energy_via_ratios(box: BoxSpec, cap: int = PAIR_CAP) -> EnergyReport:
    """Full ratio-set decomposition of E(B), cross-checked against brute force."""
    ctx = box.ctx
    if box.size > cap:
        raise BudgetExceeded(f"|B| = {box.size} exceeds the pair cap {cap}")
    B = box.points()
    Bset = np.unique(B)
    has_zero = bool((Bset == 0).any())
    R = ratio_counts(ctx, Bset)
    E = int((R.astype(object) ** 2).sum()) + ((2 * len(Bset) - 1) ** 2 if has_zero else 0)
    r_profile = product_histogram(ctx, Bset, cap)
    E_brute = sum(c * c for c in r_profile.values())

    # f(z) counts (x, y) in B^2 with xz = y; the pair (0, 0) adds one when 0 is in B
    f = _profile(ctx, R, int(has_zero))
    B0 = symmetric_box(box)
    R0 = ratio_counts(ctx, B0)
    f0 = _profile(ctx, R0, 1)

    zp_keys = np.nonzero(R)[0]
    in_Z = R0[zp_keys] > 0
    f_vals = R[zp_keys] + int(has_zero)
    f0_vals = R0[zp_keys] + 1
    sum_f2 = int((f_vals.astype(object) ** 2).sum())
    z_keys = np.nonzero(R0)[0]
    f0_all = (R0[z_keys] + 1).astype(object) ** 2
    sum_f0_2 = int(f0_all.sum())
    prime_step = ctx.order // (ctx.p - 1)
    in_prime = z_keys % prime_step == 0
    L1 = int(f0_all[~in_prime].sum())
    L2 = int(f0_all[in_prime].sum())
    outside = int((~in_Z).sum())
    size = box.size

    pointwise_gap = int((f_vals - f0_vals)[in_Z].max()) if in_Z.any() else 0
    checks = [
        check_le("energy_routes_agree", abs(E - E_brute), 0),
        check_le("EN: E <= 2|B|^2 + sum_Z' f^2", E, 2 * size**2 + sum_f2),
        check_le("fz: sum_Z' f^2 <= sum_Z f0^2 + |Z' \\ Z|", sum_f2, sum_f0_2 + outside),
        check_le("f <= f0 on Z' and Z", pointwise_gap, 0),
        check_le("E <= 3|B|^2 + L1 + L2", E, 3 * size**2 + L1 + L2),
        check_le("L1 + L2 = sum_Z f0^2", abs(L1 + L2 - sum_f0_2), 0),
    ]
    if not has_zero:
        checks.append(check_le("sum_Z' f = |B|^2", abs(int(R.sum()) - size**2), 0))
    return EnergyReport(
        p=ctx.p, n=ctx.n, H=box.H, size=size, E=E, E_bruteforce=E_brute,
        contains_zero=has_zero, r_profile=r_profile, f_profile=f, f0_profile=f0,
        Zprime_size=len(zp_keys), Z_size=len(z_keys), Zprime_minus_Z=outside,
        sum_f2=sum_f2, sum_f0_2=sum_f0_2, L1=L1, L2=L2, checks=checks,
    )


def _require_kl_shape(box: BoxSpec) -> None:
    p = box.ctx.p
    if box.ctx.n < 2:
        raise PreconditionError("the energy bound is stated for n >= 2")
    if not box.is_sorted:
        raise PreconditionError("side lengths must be sorted ascending (use box.sorted())")
    if 2 * box.H[-1] ** 2 >= p:
        raise PreconditionError(f"H_n = {box.H[-1]} is not below sqrt(p/2) for p = {p}")


def kl_verdict(box: BoxSpec, cap: int = PAIR_CAP) -> dict:
    """Energy ratios against |B|^2 (log p)^n and the exact counting chain."""
    _require_kl_shape(box)
    rep = energy_via_ratios(box, cap)
    logp = math.log(box.ctx.p)
    b2 = rep.size**2
    return {
        "report": rep,
        "kl_ratio": rep.kl_ratio,
        "L1_ratio": rep.L1 / (b2 * logp),
        "L2_ratio": rep.L2 / (b2 * logp**box.ctx.n),
        "chain": next(c for c in rep.checks if c.name.startswith("E <= 3")),
        "ok": rep.ok,
    }


def dyadic_census(box: BoxSpec, cap: int = 10**6) -> dict:
    """Dyadic classes of lambda_1(z) over z in Z outside the prime field.

    Class j holds z with ``2^(j-1) <= H_{n-1} lambda_1(z) < 2^j``; alongside,
    ``s(z) = max{j : lambda_j <= 1}`` and the integer-point count that bounds
    each class size via the injectivity of z -> shortest vector.
    """
    from .lattice import build_lambda_z, successive_minima

    _require_kl_shape(box)
    ctx = box.ctx
    B0 = symmetric_box(box)
    R0 = ratio_counts(ctx, B0)
    ks = np.nonzero(R0)[0]
    zs = ctx.exp[ks]
    zs = np.sort(zs[ctx.subfield_degree(zs) != 1])
    if len(zs) > cap:
        raise BudgetExceeded(f"{len(zs)} ratios exceed the census cap {cap}")
    H = box.H
    h_second = H[-2]
    J = int(math.floor(math.log2(h_second))) + 1
    classes: dict[int, int] = {}
    by_s: dict[int, int] = {}
    rows = []
    for z in zs.tolist():
        lat = build_lambda_z(ctx, box.basis, z, H)
        mins = successive_minima(lat)
        lam1 = mins.lambdas[0]
        scaled = lam1 * h_second
        j = 1
        while scaled >= 2**j:
            j += 1
        s = max((i + 1 for i, lam in enumerate(mins.lambdas) if lam <= 1), default=0)
        classes[j] = classes.get(j, 0) + 1
        by_s[s] = by_s.get(s, 0) + 1
        rows.append({"z": z, "lambda1": lam1, "j": j, "s": s, "above_floor": scaled >= 1,
                     "f0": int(R0[ctx.dlog[z]]) + 1})
    table = []
    for j in sorted(classes):
        bound = 1
        for h in H:
            side = (2**j * h) // h_second
            bound *= (2 * side + 1) ** 2
        table.append({"j": j, "size": classes[j], "bound": bound,
                      "holds": classes[j] <= bound})
    return {"p": ctx.p, "n": ctx.n, "H": list(H), "J": J, "classes": table,
            "by_s": {str(k): v for k, v in sorted(by_s.items())}, "rows": rows,
            "ok": all(r["holds"] for r in table) and all(r["j"] <= J and r["above_floor"] for r in rows)}
