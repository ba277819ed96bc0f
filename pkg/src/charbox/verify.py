"""Exact checks of the analytic inputs and the top-level box-sum report.

Complete sums (Weil), interval moments, Katz-type line sums, the subfield
census for long boxes, Polya-Vinogradov shifts on subfields, and
:func:`main_report`, which routes a box to one of three regimes by its
longest side.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .boxes import BoxSpec, box_char_sum
from .burgess import burgess_pipeline
from .chars import Character, interval_moment, restriction_is_trivial
from .errors import BudgetExceeded, CharboxError, InputError, PreconditionError
from .field import FieldCtx, smallest_prime_divisor
from .numeric import (
    EXACT_ORDERS, Approx, Check, CycloSum, abs2_counts, approx_of,
    check_le, check_le_sqrt, is_exact, jsonable, root_table,
)

R_MAX = 6


# -- Weil -----------------------------------------------------------------------

@dataclass
class WeilResult:
    value: CycloSum
    abs2: int | Approx
    roots: int
    q: int
    check: Check

    def to_dict(self) -> dict:
        return jsonable({"sum": self.value, "abs2": self.abs2, "roots": self.roots,
                         "bound": (self.roots - 1) * math.sqrt(self.q), "check": self.check})


def weil_complete(ctx: FieldCtx, chi: Character, roots, mult=None) -> WeilResult:
    """``sum_x chi(prod (x - a_i)^{e_i})`` over the whole field against (m-1) sqrt(q)."""
    roots = [int(a) for a in roots]
    ctx.check(roots)
    if len(set(roots)) != len(roots):
        raise InputError("roots must be distinct")
    if not roots:
        raise InputError("need at least one root")
    mult = [1] * len(roots) if mult is None else [int(e) for e in mult]
    if len(mult) != len(roots) or any(e < 1 for e in mult):
        raise InputError("one positive multiplicity per root")
    d = chi.order
    if chi.is_trivial:
        raise PreconditionError("the bound needs a nontrivial character")
    if all(e % d == 0 for e in mult):
        raise PreconditionError(f"the polynomial is a {d}-th power; the bound does not apply")
    x = np.arange(ctx.q, dtype=np.int64)
    total = np.zeros(ctx.q, dtype=np.int64)
    zero = np.zeros(ctx.q, dtype=bool)
    for a, e in zip(roots, mult):
        cls = chi.classes(ctx.sub(x, a))
        zero |= cls < 0
        total = (total + e * np.maximum(cls, 0)) % d
    value = CycloSum.from_classes(np.where(zero, -1, total), d)
    a2 = value.abs2()
    m = len(roots)
    chk = check_le("weil: |sum| <= (m-1) sqrt(q)", a2, (m - 1) ** 2 * ctx.q)
    return WeilResult(value, a2, m, ctx.q, chk)


@dataclass
class MomentResult:
    lhs: int | Approx
    interval: tuple[int, int]
    r: int
    check: Check

    def to_dict(self) -> dict:
        return jsonable({"lhs": self.lhs, "interval": list(self.interval), "r": self.r,
                         "rhs": self.check.rhs, "holds": self.check.holds, "check": self.check})


def weil_moment(ctx: FieldCtx, chi: Character, interval: tuple[int, int], r: int) -> MomentResult:
    """``sum_u |sum_{z in I} chi(u + z)|^{2r} <= 2r sqrt(q) |I|^{2r} + q |I|^r r^{2r}``."""
    if chi.is_trivial:
        raise PreconditionError("the moment bound needs a nontrivial character")
    if not 1 <= r <= R_MAX:
        raise PreconditionError(f"r must lie in [1, {R_MAX}]")
    lhs = interval_moment(chi, interval, r)
    w = interval[1] - interval[0] + 1
    q = ctx.q
    a, b = 2 * r * w ** (2 * r), q * w**r * r ** (2 * r)
    name = "moment: LHS <= 2r q^(1/2) |I|^2r + q |I|^r r^2r"
    if is_exact(lhs):
        chk = check_le_sqrt(name, lhs, a, q, b)
    else:
        chk = check_le(name, lhs, approx_of(a * math.sqrt(q) + b, 2.0**-48))
    return MomentResult(lhs, (int(interval[0]), int(interval[1])), r, chk)


# -- Katz -----------------------------------------------------------------------

def katz_complete(ctx: FieldCtx, chi: Character, g: int) -> CycloSum:
    """``sum_{t in F_p} chi(g + t)`` exactly."""
    t = np.arange(ctx.p, dtype=np.int64)
    return chi.sum(ctx.add_scalar(np.full(ctx.p, int(g)), t))


def generators_of_extension(ctx: FieldCtx) -> np.ndarray:
    x = np.arange(ctx.q, dtype=np.int64)
    return x[ctx.subfield_degree(x) == ctx.n]


@dataclass
class KatzScan:
    p: int
    n: int
    order: int
    lengths: list[int]
    generators: int
    max_abs: float
    max_ratio: float
    argmax: tuple[int, int, int]
    per_length: dict[int, float] = field(repr=False)
    checks: list[Check] = field(default_factory=list)

    def to_dict(self) -> dict:
        return jsonable({
            "p": self.p, "n": self.n, "order": self.order, "generators": self.generators,
            "lengths": [self.lengths[0], self.lengths[-1]] if self.lengths else [],
            "max_abs": self.max_abs, "max_ratio": self.max_ratio,
            "argmax": {"g": self.argmax[0], "start": self.argmax[1], "length": self.argmax[2]},
            "per_length": {str(k): v for k, v in sorted(self.per_length.items())},
            "checks": self.checks,
        })


def katz_scan(ctx: FieldCtx, chi: Character, interval_len: int | None = None,
              budget: int = 2 * 10**8) -> KatzScan:
    """Max of ``|sum_{t in I} chi(g + t)|`` over generators g and windows I in [1, p].

    ``interval_len=None`` scans every length.  Ratios are against ``sqrt(p) log p``.
    """
    if chi.is_trivial:
        raise PreconditionError("the scan needs a nontrivial character")
    p, d = ctx.p, chi.order
    gens = generators_of_extension(ctx)
    lengths = list(range(1, p + 1)) if interval_len is None else [int(interval_len)]
    if any(not 1 <= L <= p for L in lengths):
        raise InputError(f"interval length must lie in [1, {p}]")
    work = len(gens) * sum(p - L + 1 for L in lengths) * (d if d in EXACT_ORDERS else 2)
    if work > budget:
        raise BudgetExceeded(f"scan needs {work} window evaluations (budget {budget})")
    t = np.arange(1, p + 1, dtype=np.int64)
    scale = math.sqrt(p) * math.log(p)
    best = (-1.0, (0, 0, 0))
    per_length = {L: 0.0 for L in lengths}
    tri_ok = True
    chunk = max(1, 4096 // p)
    for start in range(0, len(gens), chunk):
        g = gens[start:start + chunk]
        cls = chi.classes(ctx.add_scalar(g[:, None], t[None, :]))  # G x p
        if d in EXACT_ORDERS:
            onehot = np.zeros(cls.shape + (d,), dtype=np.int64)
            gi, ti = np.nonzero(cls >= 0)
            onehot[gi, ti, cls[gi, ti]] = 1
            cum = np.concatenate([np.zeros((len(g), 1, d), dtype=np.int64), onehot.cumsum(axis=1)], axis=1)
        else:
            cos, sin = root_table(d)
            valid = cls >= 0
            kk = np.where(valid, cls, 0)
            re = np.where(valid, cos[kk], 0).cumsum(axis=1)
            im = np.where(valid, sin[kk], 0).cumsum(axis=1)
            zero = np.zeros((len(g), 1), dtype=np.longdouble)
            re = np.concatenate([zero, re], axis=1)
            im = np.concatenate([zero, im], axis=1)
        for L in lengths:
            if d in EXACT_ORDERS:
                win = cum[:, L:, :] - cum[:, :-L, :]
                vals, _ = abs2_counts(win.reshape(-1, d), d)
                vals = vals.reshape(len(g), -1).astype(np.float64)
                tri_ok &= bool((vals <= L * L).all())
            else:
                wr = re[:, L:] - re[:, :-L]
                wi = im[:, L:] - im[:, :-L]
                vals = (wr * wr + wi * wi).astype(np.float64)
                tri_ok &= bool((vals <= L * L + 1e-6 * L * L).all())
            flat = int(np.argmax(vals))
            gi, ai = divmod(flat, vals.shape[1])
            v = math.sqrt(float(vals[gi, ai]))
            per_length[L] = max(per_length[L], v / scale)
            if v > best[0]:
                best = (v, (int(g[gi]), ai + 1, L))
    checks = [Check("katz: |sum| <= |I| on every window", 0, 0, tri_ok, d in EXACT_ORDERS)]
    return KatzScan(p, ctx.n, d, lengths, len(gens), best[0], best[0] / scale, best[1],
                    per_length, checks)


# -- subfield census --------------------------------------------------------------

@dataclass
class SubfieldCensus:
    p: int
    n: int
    r_small: int
    sub_degree: int
    k: int
    order: list[int]
    member: list[bool]
    Omega_size: int
    Omega_q_size: int
    bound: int
    max_completions: int
    Wq_size: int
    Wq_in_subfield: bool
    checks: list[Check]

    @property
    def bound_holds(self) -> bool:
        return self.Omega_q_size <= self.bound

    def to_dict(self) -> dict:
        return jsonable({
            "p": self.p, "n": self.n, "r_small": self.r_small, "sub_degree": self.sub_degree,
            "k": self.k, "order": self.order, "member": self.member,
            "Omega_size": self.Omega_size, "Omega_q_size": self.Omega_q_size,
            "bound": self.bound, "bound_holds": self.bound_holds,
            "max_completions": self.max_completions, "Wq_size": self.Wq_size,
            "Wq_in_subfield": self.Wq_in_subfield, "checks": self.checks,
        })


def _ratio_coords(box: BoxSpec) -> np.ndarray:
    ctx = box.ctx
    om = np.array(box.basis.omega)
    return ctx.div(om[:-1], om[-1])


def _tuple_elements(ctx: FieldCtx, rho: np.ndarray, ranges: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """All ``sum x_j rho_j`` for x in the product of ranges, with the x tuples."""
    if not ranges:
        return np.zeros((1, 0), dtype=np.int64), np.zeros(1, dtype=np.int64)
    shape = [len(r) for r in ranges]
    idx = np.indices(shape).reshape(len(shape), -1).T
    X = np.stack([r[idx[:, j]] for j, r in enumerate(ranges)], axis=1)
    coords = np.zeros((len(X), ctx.n), dtype=np.int64)
    rc = ctx.coords(rho)
    for j in range(X.shape[1]):
        coords = (coords + (X[:, j:j + 1] % ctx.p) * rc[j]) % ctx.p
    return X, ctx.index(coords)


def subfield_census(box: BoxSpec, cap: int = 10**7) -> SubfieldCensus:
    """Count coordinate tuples whose ratio combination falls in a proper subfield."""
    ctx = box.ctx
    n, p = ctx.n, ctx.p
    if n < 2:
        raise PreconditionError("the census needs n >= 2")
    tuples = 1
    for h in box.H[:-1]:
        tuples *= h
    if tuples > cap:
        raise BudgetExceeded(f"{tuples} coordinate tuples exceed the census cap {cap}")
    r_small = smallest_prime_divisor(n)
    sub = n // r_small
    rho = _ratio_coords(box)
    member = [bool(sub % int(ctx.subfield_degree(int(x))) == 0) for x in rho]
    order = sorted(range(n - 1), key=lambda j: (not member[j], j))
    k = sum(member)
    ranges = [r for r in box.ranges()[:-1]]
    X, elems = _tuple_elements(ctx, rho, ranges)
    deg = ctx.subfield_degree(elems)
    in_omega = deg != n
    in_omega_q = sub % deg == 0
    bound = 1
    for j in order[:k]:
        bound *= box.H[j]
    groups: dict[tuple, int] = defaultdict(int)
    for row in X[in_omega_q][:, order[:k]].tolist():
        groups[tuple(row)] += 1
    max_completions = max(groups.values(), default=0)
    # W_q: member ratios with the last coordinate
    mem_idx = order[:k]
    Xw, w_elems = _tuple_elements(ctx, rho[mem_idx], [ranges[j] for j in mem_idx])
    last = box.ranges()[-1]
    W = np.unique(ctx.add_scalar(w_elems[:, None], last[None, :]))
    w_in_sub = bool((sub % ctx.subfield_degree(W) == 0).all())
    checks = [
        check_le("k <= n/r - 1", k, sub - 1),
        check_le("|Omega_q| <= prod_{i<=k} |I_i|", int(in_omega_q.sum()), bound),
        Check("Omega_q inside Omega", 0, 0, bool((~in_omega_q | in_omega).all()), True),
        check_le("at most one completion per fixed member coordinates", max_completions, 1),
        Check("W_q inside the subfield", 0, 0, w_in_sub, True),
    ]
    return SubfieldCensus(p, n, r_small, sub, k, order, member, int(in_omega.sum()),
                          int(in_omega_q.sum()), bound, max_completions, len(W), w_in_sub, checks)


# -- Polya-Vinogradov on a subfield -------------------------------------------------

def subfield_box(ctx: FieldCtx, s: int, H, N=None) -> np.ndarray:
    """Box in F_{p^s} over the basis 1, c, ..., c^(s-1) with c a generator of F_{p^s}^*."""
    if ctx.n % s:
        raise InputError(f"{s} does not divide n={ctx.n}")
    H = [int(h) for h in H]
    N = [0] * s if N is None else [int(v) for v in N]
    if len(H) != s or len(N) != s:
        raise InputError(f"a box in F_(p^{s}) needs {s} side lengths")
    c = int(ctx.exp[ctx.order // (ctx.p**s - 1)])
    omega = [int(ctx.pow(c, i)) for i in range(s)]
    ranges = [np.arange(a + 1, a + h + 1, dtype=np.int64) for a, h in zip(N, H)]
    mat = ctx.coords(np.array(omega))
    shape = [len(r) for r in ranges]
    idx = np.indices(shape).reshape(s, -1).T
    coords = np.zeros((len(idx), ctx.n), dtype=np.int64)
    for i, r in enumerate(ranges):
        coords = (coords + (r[idx[:, i]] % ctx.p)[:, None] * mat[i]) % ctx.p
    return np.unique(ctx.index(coords))


@dataclass
class PVResult:
    s: int
    size: int
    shifts: int
    sampled: bool
    seed: int | None
    max_abs: float
    argmax: int
    ratio: float
    checks: list[Check]

    def to_dict(self) -> dict:
        return jsonable(self.__dict__)


def pv_subfield_check(ctx: FieldCtx, s: int, A, chi: Character, max_shifts: int = 10**5,
                      seed: int = 0) -> PVResult:
    """``max_z |sum_{y in A} chi(y + z)|`` over shifts z in F_{p^s}.

    All shifts are used when there are at most ``max_shifts``; otherwise a
    seeded uniform sample of that many.
    """
    if ctx.n % s:
        raise InputError(f"{s} does not divide n={ctx.n}")
    if restriction_is_trivial(chi, s):
        raise PreconditionError(f"chi is trivial on F_(p^{s}); no cancellation is possible")
    A = np.unique(np.asarray(A, dtype=np.int64))
    ctx.check(A)
    if not (s % ctx.subfield_degree(A) == 0).all():
        raise InputError(f"A is not contained in F_(p^{s})")
    sub = ctx.subfield_elements(s)
    sampled = len(sub) > max_shifts
    if sampled:
        rng = np.random.default_rng(seed)
        sub = np.sort(rng.choice(sub, size=max_shifts, replace=False))
    best, arg = -1.0, 0
    errs = []
    chunk = max(1, (1 << 20) // max(len(A), 1))
    for start in range(0, len(sub), chunk):
        z = sub[start:start + chunk]
        pts = ctx.add(A[None, :], z[:, None])
        cls = chi.classes(pts)
        counts = np.zeros((len(z), chi.order), dtype=np.int64)
        rows = np.repeat(np.arange(len(z)), len(A))
        flat = cls.ravel()
        ok = flat >= 0
        np.add.at(counts, (rows[ok], flat[ok]), 1)
        vals, err = abs2_counts(counts, chi.order)
        vals = np.asarray(vals, dtype=np.float64)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, arg = float(vals[i]), int(z[i])
        errs.append(np.max(err) if np.ndim(err) else err)
    max_abs = math.sqrt(best)
    scale = math.log(ctx.p) ** (ctx.n / 2) * ctx.p ** (ctx.n / 4)
    checks = [check_le("PV: |sum| <= |A|", approx_of(best), len(A) ** 2)]
    return PVResult(s, len(A), len(sub), sampled, seed if sampled else None, max_abs, arg,
                    max_abs / scale, checks)


# -- main report --------------------------------------------------------------------

def delta_of_epsilon(epsilon: float, n: int) -> float:
    """Saving exponent ``eps^2 (1 - 1/2n) / ((1 + 1/4n)(2 - 1/2n))``."""
    return epsilon**2 * (1 - 1 / (2 * n)) / ((1 + 1 / (4 * n)) * (2 - 1 / (2 * n)))


def route_case(p: int, h_max: int, epsilon: float) -> int:
    """1 when 2 H^2 < p, 3 when H > p^((1+eps)/2), otherwise 2."""
    if 2 * h_max * h_max < p:
        return 1
    if 2 * math.log(h_max) > (1 + epsilon) * math.log(p):
        return 3
    return 2


def split_edge(h: int, p: int) -> list[int]:
    """Near-equal pieces of a long edge, each at most floor(sqrt(p/2))."""
    top = math.isqrt(p // 2)
    if 2 * h * h < p:
        return [h]
    m = -(-h // top)
    base, extra = divmod(h, m)
    return [base + 1] * extra + [base] * (m - extra)


@dataclass
class BoundReport:
    case_id: int
    p: int
    n: int
    H: tuple[int, ...]
    epsilon: float
    epsilon_max: float
    delta_eps: float
    hypothesis_met: bool
    size: int
    S: CycloSum
    normalized: float
    predicted: float
    details: dict
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_dict(self) -> dict:
        return jsonable({
            "case_id": self.case_id, "p": self.p, "n": self.n, "H": list(self.H),
            "epsilon": self.epsilon, "epsilon_max": self.epsilon_max,
            "delta_eps": self.delta_eps, "hypothesis_met": self.hypothesis_met,
            "size": self.size, "S": self.S, "normalized": self.normalized,
            "predicted": self.predicted, "details": self.details, "checks": self.checks,
        })


def _sub_box(box: BoxSpec, offsets, sides) -> BoxSpec:
    return BoxSpec(box.basis, tuple(N + o for N, o in zip(box.N, offsets)), tuple(sides))


def _burgess_or_reason(box: BoxSpec, chi: Character, epsilon: float, **kw):
    try:
        return burgess_pipeline(box, chi, epsilon, **kw)
    except CharboxError as exc:
        return {"skipped": str(exc)}


def main_report(box: BoxSpec, chi: Character, epsilon: float, r_override: int | None = None,
                delta_override=None) -> BoundReport:
    ctx = box.ctx
    p, n = ctx.p, ctx.n
    if chi.is_trivial:
        raise PreconditionError("the main bound concerns nontrivial characters")
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    box = box if box.is_sorted else box.sorted()
    size = box.size
    S = box_char_sum(box, chi).total
    h_max = box.H[-1]
    case = route_case(p, h_max, epsilon)
    eps_max = math.log(size, p) / n - 0.25
    hyp = math.log(size) >= n * (0.25 + epsilon) * math.log(p)
    d_eps = delta_of_epsilon(epsilon, n)
    checks: list[Check] = []
    details: dict = {}
    kw = {"r_override": r_override, "delta_override": delta_override}

    if case == 1:
        rep = _burgess_or_reason(box, chi, epsilon, **kw)
        details["burgess"] = rep
        if not isinstance(rep, dict):
            checks += rep.checks
    elif case == 2:
        pieces = [split_edge(h, p) for h in box.H]
        details["pieces"] = pieces
        in_range = all(4 * s * s > p and 2 * s * s < p for h, ps in zip(box.H, pieces)
                       if len(ps) > 1 for s in ps)
        details["pieces_in_range"] = in_range
        starts = [np.concatenate([[0], np.cumsum(ps)[:-1]]).tolist() for ps in pieces]
        total = CycloSum.zero(chi.order)
        subs = []
        for choice in product(*[range(len(ps)) for ps in pieces]):
            offs = [starts[i][c] for i, c in enumerate(choice)]
            sides = [pieces[i][c] for i, c in enumerate(choice)]
            sb = _sub_box(box, offs, sides)
            s_alpha = box_char_sum(sb, chi)
            total = total + s_alpha.total
            rep = _burgess_or_reason(sb, chi, epsilon, **kw)
            subs.append({"offsets": offs, "H": sides, "normalized": s_alpha.normalized,
                         "burgess": rep})
            if not isinstance(rep, dict):
                checks += [Check(f"piece {tuple(offs)}: {c.name}", c.lhs, c.rhs, c.holds, c.exact)
                           for c in rep.checks]
        details["sub_boxes"] = subs
        checks.append(Check("pieces sum to S", 0, 0, total == S, True))
    else:
        details.update(_case_three(box, chi))
        checks += details.pop("checks")

    return BoundReport(case, p, n, box.H, float(epsilon), eps_max, d_eps, hyp, size, S,
                       S.abs() / size, p ** (-d_eps), details, checks)


def _case_three(box: BoxSpec, chi: Character) -> dict:
    """Split the sum by whether the ratio combination generates the whole field."""
    ctx = box.ctx
    p, n = ctx.p, ctx.n
    if n < 2:
        raise PreconditionError("the long-edge split needs n >= 2")
    r_small = smallest_prime_divisor(n)
    sub = n // r_small
    rho = _ratio_coords(box)
    X, elems = _tuple_elements(ctx, rho, box.ranges()[:-1])
    deg = ctx.subfield_degree(elems)
    last = box.ranges()[-1]
    inner_pts = ctx.add_scalar(elems[:, None], last[None, :])  # g + x_n
    pts = ctx.mul(inner_pts, box.basis.omega[-1])  # omega_n (g + x_n) = x
    cls = chi.classes(pts)
    d = chi.order
    parts = {"katz": deg == n, "omega_q": sub % deg == 0}
    parts["omega_rest"] = ~(parts["katz"] | parts["omega_q"])
    sums = {k: CycloSum.from_classes(cls[m], d) for k, m in parts.items()}
    total = sums["katz"] + sums["omega_q"] + sums["omega_rest"]
    S = box_char_sum(box, chi).total
    scale = math.sqrt(p) * math.log(p)
    counts = np.zeros((len(elems), d), dtype=np.int64)
    rows = np.repeat(np.arange(len(elems)), len(last))
    flat = cls.ravel()
    ok = flat >= 0
    np.add.at(counts, (rows[ok], flat[ok]), 1)
    inner_abs2, _ = abs2_counts(counts, d)
    inner_abs = np.sqrt(np.asarray(inner_abs2, dtype=np.float64))
    katz_max = float(inner_abs[parts["katz"]].max()) if parts["katz"].any() else 0.0
    out = {
        "r_small": r_small,
        "restriction_trivial": restriction_is_trivial(chi, sub),
        "tuples": {k: int(m.sum()) for k, m in parts.items()},
        "part_sums": {k: v for k, v in sums.items()},
        "katz_max_ratio": katz_max / scale,
        "census": subfield_census(box),
        "checks": [Check("parts sum to S", 0, 0, total == S, True)],
    }
    return out
