"""The lattice of coordinate pairs ``(x, y)`` with ``z * x = y``, and its minima.

For a basis ``w`` of F_{p^n} and ``z`` in the field, ``Lambda_z`` is the set of
integer vectors ``(x_1..x_n, y_1..y_n)`` with ``z * sum x_i w_i = sum y_i w_i``.
Writing ``Mz[i]`` for the w-coordinates of ``z * w_i``, membership is the
congruence ``y = x @ Mz (mod p)``.  Norms are the weighted sup-norm
``max_i max(|x_i|, |y_i|) / H_i``, kept exact by scaling with ``lcm(H)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .boxes import Basis
from .errors import BudgetExceeded, InputError, PreconditionError
from .field import FieldCtx
from .numeric import Check, check_le

ENUM_BUDGET = 5 * 10**7


@dataclass(frozen=True, eq=False)
class LatticeInstance:
    ctx: FieldCtx
    basis: Basis
    z: int
    Mz: np.ndarray = field(repr=False)
    basis_matrix: np.ndarray = field(repr=False)
    H: tuple[int, ...]

    @property
    def dim(self) -> int:
        return 2 * self.ctx.n

    @property
    def scale(self) -> int:
        return math.lcm(*self.H)

    @property
    def weights(self) -> np.ndarray:
        """Integer multipliers turning |coordinate| into scale * norm."""
        w = np.array([self.scale // h for h in self.H], dtype=np.int64)
        return np.concatenate([w, w])

    def contains(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        n, p = self.ctx.n, self.ctx.p
        return ((v[..., :n] @ self.Mz - v[..., n:]) % p == 0).all(axis=-1)

    def int_norm(self, v) -> np.ndarray:
        """``scale * norm`` as exact integers."""
        return (np.abs(np.asarray(v, dtype=np.int64)) * self.weights).max(axis=-1)

    def norm(self, v) -> Fraction:
        return Fraction(int(self.int_norm(v)), self.scale)

    def determinant(self) -> int:
        return exact_det(self.basis_matrix.tolist())


def build_lambda_z(ctx: FieldCtx, basis: Basis, z: int, H) -> LatticeInstance:
    """Generator rows ``(e_i, Mz[i])`` and ``(0, p e_j)``; |det| = p^n is verified."""
    ctx.check(z)
    H = tuple(int(h) for h in H)
    n, p = ctx.n, ctx.p
    if len(H) != n or any(h < 1 for h in H):
        raise InputError(f"H needs n={n} positive entries")
    Mz = basis.coordinates(ctx.mul(int(z), np.array(basis.omega))).astype(np.int64)
    top = np.concatenate([np.eye(n, dtype=np.int64), Mz], axis=1)
    bottom = np.concatenate([np.zeros((n, n), dtype=np.int64), p * np.eye(n, dtype=np.int64)], axis=1)
    inst = LatticeInstance(ctx, basis, int(z), Mz, np.concatenate([top, bottom]), H)
    det = inst.determinant()
    if abs(det) != p**n:
        raise ArithmeticError(f"generator determinant {det} is not +-p^n")
    return inst


# -- exact linear algebra -------------------------------------------------------

def exact_det(rows) -> int:
    """Determinant of an integer matrix by fraction-free (Bareiss) elimination."""
    M = [[int(v) for v in r] for r in rows]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k]), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[-1][-1] if n else 1


def fraction_inverse(rows) -> list[list[Fraction]]:
    n = len(rows)
    A = [[Fraction(v) for v in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


def fraction_matmul(a, b):
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in zip(*b)] for row in a]


def _transpose(a):
    return [list(r) for r in zip(*a)]


def _is_unimodular(M) -> bool:
    if any(Fraction(v).denominator != 1 for r in M for v in r):
        return False
    return abs(exact_det([[int(v) for v in r] for r in M])) == 1


class _Span:
    """Growing span of integer vectors with a vectorised independence test.

    Keeps an integer basis of the orthogonal complement: a vector lies in the
    span exactly when all its inner products with that basis vanish.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.vectors: list[list[int]] = []
        self.complement = np.eye(dim, dtype=object)

    def independent(self, V: np.ndarray) -> np.ndarray:
        if not len(self.vectors):
            return np.any(V != 0, axis=1)
        C = self.complement
        if C.shape[1] == 0:
            return np.zeros(len(V), dtype=bool)
        if np.abs(C).max() < 1 << 20:
            return np.any(V @ C.astype(np.int64) != 0, axis=1)
        return np.any(V.astype(object) @ C != 0, axis=1)

    def add(self, v) -> None:
        self.vectors.append([int(x) for x in v])
        self.complement = _integer_nullspace(self.vectors, self.dim)


def _integer_nullspace(rows: list[list[int]], dim: int) -> np.ndarray:
    """Columns spanning {c : rows @ c = 0} over Q, scaled to primitive integers."""
    A = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    r = 0
    for c in range(dim):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        lead = A[r][c]
        A[r] = [v / lead for v in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(dim) if c not in pivots]
    cols = []
    for fcol in free:
        vec = [Fraction(0)] * dim
        vec[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -A[i][fcol]
        den = math.lcm(*(v.denominator for v in vec))
        ints = [int(v * den) for v in vec]
        g = math.gcd(*ints)
        cols.append([v // g for v in ints])
    if not cols:
        return np.zeros((dim, 0), dtype=object)
    return np.array(cols, dtype=object).T


# -- enumeration ----------------------------------------------------------------

def _centered(a: np.ndarray, p: int) -> np.ndarray:
    a = np.asarray(a) % p
    return np.where(a > p // 2, a - p, a)


def points_within(L: LatticeInstance, bound: int, budget: int = ENUM_BUDGET) -> np.ndarray:
    """All lattice vectors with ``int_norm <= bound`` (so norm <= bound / scale)."""
    n, p = L.ctx.n, L.ctx.p
    w = L.weights[:n]
    radii = [bound // int(wi) for wi in w]
    xs_count = 1
    for r in radii:
        xs_count *= 2 * r + 1
    if xs_count > budget:
        raise BudgetExceeded(f"enumeration of {xs_count} x-vectors exceeds budget {budget}")
    out = []
    grids = [np.arange(-r, r + 1, dtype=np.int64) for r in radii]
    chunk = 1 << 18
    for start in range(0, xs_count, chunk):
        flat = np.arange(start, min(start + chunk, xs_count))
        idx = np.unravel_index(flat, [len(g) for g in grids])
        X = np.stack([g[i] for g, i in zip(grids, idx)], axis=1)
        Y0 = (X @ L.Mz) % p
        # each y_i ranges over residues Y0_i + k p inside [-radius_i, radius_i]
        lifts = []
        for i in range(n):
            r = radii[i]
            ks = np.arange(-(r // p) - 1, r // p + 2)
            cand = Y0[:, i:i + 1] + ks[None, :] * p
            lifts.append(np.where(np.abs(cand) <= r, cand, p * (r + 1) + 1))
        for combo in product(*[range(l.shape[1]) for l in lifts]):
            Y = np.stack([lifts[i][:, c] for i, c in enumerate(combo)], axis=1)
            ok = (np.abs(Y) <= np.array(radii)).all(axis=1)
            if ok.any():
                out.append(np.concatenate([X[ok], Y[ok]], axis=1))
    if not out:
        return np.zeros((0, 2 * n), dtype=np.int64)
    return np.concatenate(out)


@dataclass
class MinimaResult:
    lambdas: list[Fraction]
    witnesses: list[tuple[int, ...]]
    complete: bool = True
    point_count: int | None = None
    dual_lambda1: Fraction | None = None
    minkowski_lo: Fraction | None = None
    minkowski_hi: Fraction | None = None

    def to_dict(self) -> dict:
        return {
            "lambdas": [str(l) for l in self.lambdas],
            "witnesses": [list(w) for w in self.witnesses],
            "complete": self.complete,
            "point_count": self.point_count,
            "dual_lambda1": None if self.dual_lambda1 is None else str(self.dual_lambda1),
            "minkowski_lo": None if self.minkowski_lo is None else str(self.minkowski_lo),
            "minkowski_hi": None if self.minkowski_hi is None else str(self.minkowski_hi),
        }


def successive_minima(L: LatticeInstance, budget: int = ENUM_BUDGET) -> MinimaResult:
    """Exact successive minima by greedy extraction in order of increasing norm.

    All points with norm up to a radius are listed and sorted; the greedy scan is
    exact once 2n independent vectors appear within the listed radius.  The
    radius doubles until then, capped by the generator norm ``p / min(H)``.
    """
    dim, p = L.dim, L.ctx.p
    scale = L.scale
    cap_bound = p * max(int(w) for w in L.weights)  # every generator row fits
    bound = min(scale, cap_bound)
    while True:
        try:
            pts = points_within(L, bound, budget)
        except BudgetExceeded:
            res = _greedy(L, points_within(L, bound // 2, budget) if bound > 1 else
                          np.zeros((0, dim), dtype=np.int64))
            res.complete = False
            return res
        res = _greedy(L, pts)
        if len(res.lambdas) == dim or bound >= cap_bound:
            if len(res.lambdas) < dim:
                raise ArithmeticError("generator rows should lie within the final radius")
            return res
        bound = min(2 * bound, cap_bound)


def _greedy(L: LatticeInstance, pts: np.ndarray) -> MinimaResult:
    norms = L.int_norm(pts) if len(pts) else np.zeros(0, dtype=np.int64)
    keep = norms > 0
    pts, norms = pts[keep], norms[keep]
    # sort by norm, then lexicographically descending so (1,0,..) precedes (-1,0,..)
    order = np.lexsort(tuple(-pts[:, j] for j in reversed(range(pts.shape[1]))) + (norms,))
    pts, norms = pts[order], norms[order]
    span = _Span(L.dim)
    lambdas, witnesses = [], []
    pos = 0
    while pos < len(pts) and len(lambdas) < L.dim:
        ind = span.independent(pts[pos:])
        hit = np.argmax(ind)
        if not ind[hit]:
            break
        v = pts[pos + hit]
        span.add(v)
        lambdas.append(Fraction(int(norms[pos + hit]), L.scale))
        witnesses.append(tuple(int(x) for x in v))
        pos += hit + 1
    return MinimaResult(lambdas, witnesses)


def count_points(L: LatticeInstance, scale=1, budget: int = ENUM_BUDGET) -> int:
    """|Lambda_z intersected with scale * D| exactly."""
    scale = Fraction(scale)
    if scale < 0:
        raise InputError("scale must be non-negative")
    bound = math.floor(scale * L.scale)
    return int(len(points_within(L, bound, budget)))


def count_report(L: LatticeInstance, R: MinimaResult, scale=1) -> dict:
    scale = Fraction(scale)
    count = count_points(L, scale)
    prod = Fraction(1)
    for lam in R.lambdas:
        prod *= max(Fraction(1), scale / lam)
    return {"scale": str(scale), "count": count, "product": str(prod),
            "ratio": float(count / prod)}


def minkowski_check(R: MinimaResult, L: LatticeInstance) -> list[Check]:
    """``2^d/d! p^n <= prod(lambda) * vol(D) <= 2^d p^n`` with d = 2n, exactly."""
    if len(R.lambdas) != L.dim:
        raise PreconditionError("Minkowski check needs all successive minima")
    d, p, n = L.dim, L.ctx.p, L.ctx.n
    vol = 1
    for h in L.H:
        vol *= (2 * h) ** 2
    prod = Fraction(vol)
    for lam in R.lambdas:
        prod *= lam
    lo = Fraction(2**d * p**n, math.factorial(d))
    hi = Fraction(2**d * p**n)
    R.minkowski_lo, R.minkowski_hi = lo, hi
    return [check_le("minkowski_lower", lo, prod), check_le("minkowski_upper", prod, hi)]


def span_property_check(L: LatticeInstance, R: MinimaResult, budget: int = ENUM_BUDGET) -> Check:
    """Every lattice point of norm below lambda_j lies in the span of the first j-1 witnesses."""
    if len(R.lambdas) != L.dim:
        raise PreconditionError("the span check needs all successive minima")
    top = int(R.lambdas[-1] * L.scale)
    pts = points_within(L, top, budget)
    norms = L.int_norm(pts)
    span = _Span(L.dim)
    escaped = 0
    for j, (lam, w) in enumerate(zip(R.lambdas, R.witnesses)):
        inside = pts[norms < lam * L.scale]
        escaped += int(span.independent(inside).sum()) if len(inside) else 0
        span.add(w)
    return Check("points below lambda_j stay in the span of earlier witnesses", escaped, 0,
                 escaped == 0, True)


def lambda1_floor_check(L: LatticeInstance, R: MinimaResult) -> Check:
    """lambda_1 >= 1 / H_{n-1} (second largest side) for z outside the prime field."""
    if int(L.ctx.subfield_degree(L.z)) == 1:
        raise PreconditionError("z lies in the prime field; the floor is claimed only off it")
    if L.ctx.n < 2:
        raise PreconditionError("needs n >= 2")
    h = sorted(L.H)[-2]
    return check_le("lambda1 >= 1/H_{n-1}", Fraction(1, h), R.lambdas[0])


# -- duality ----------------------------------------------------------------------

def dual_generators(L: LatticeInstance) -> np.ndarray:
    """Rows generating ``p * Lambda_z^*`` = {(a, b) : a = -Mz b (mod p)}."""
    n, p = L.ctx.n, L.ctx.p
    top = np.concatenate([p * np.eye(n, dtype=np.int64), np.zeros((n, n), dtype=np.int64)], axis=1)
    bottom = np.concatenate([(-L.Mz.T) % p, np.eye(n, dtype=np.int64)], axis=1)
    return np.concatenate([top, bottom])


@dataclass
class DualResult:
    lambda1: Fraction
    witness: tuple[int, ...]
    transference: Fraction | None
    checks: list[Check]

    def to_dict(self) -> dict:
        return {"lambda1": str(self.lambda1), "witness": list(self.witness),
                "transference": None if self.transference is None else str(self.transference),
                "checks": [c.to_dict() for c in self.checks]}


def dual_first_minimum(L: LatticeInstance, R: MinimaResult | None = None,
                       budget: int = ENUM_BUDGET) -> DualResult:
    """First minimum of the cross-polytope ``sum (|u_i| + |v_i|) H_i <= 1`` on the dual.

    Elements of ``p * Lambda^*`` are ``(a, b)`` with ``a = -Mz b (mod p)``.  For a
    fixed ``b`` the gauge is separable in ``a``, so each ``a_i`` is the centred
    residue.  ``b`` ranges over the weighted l1 ball that could still beat the
    best value found so far.
    """
    n, p = L.ctx.n, L.ctx.p
    H = np.array(L.H, dtype=np.int64)
    best = p * int(H.min())
    i_min = int(np.argmin(H))
    witness = tuple(p * int(j == i_min) for j in range(2 * n))
    radii = [best // int(h) for h in H]
    total = 1
    for r in radii:
        total *= 2 * r + 1
    if total > budget:
        raise BudgetExceeded(f"dual search over {total} vectors exceeds budget {budget}")
    grids = [np.arange(-r, r + 1, dtype=np.int64) for r in radii]
    chunk = 1 << 18
    negM = -L.Mz
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, [len(g) for g in grids])
        b = np.stack([g[i] for g, i in zip(grids, idx)], axis=1)
        cost_b = np.abs(b) @ H
        ok = (cost_b < best) & (b != 0).any(axis=1)
        if not ok.any():
            continue
        b = b[ok]
        a = _centered(b @ negM.T, p)
        cost = cost_b[ok] + np.abs(a) @ H
        k = int(np.argmin(cost))
        if cost[k] < best:
            best = int(cost[k])
            witness = tuple(int(v) for v in np.concatenate([a[k], b[k]]))
    lam = Fraction(best, p)
    checks = duality_checks(L)
    checks.append(check_le("lambda1* >= H_1/p", Fraction(int(H.min()), p), lam))
    trans = None
    if R is not None and len(R.lambdas) == L.dim:
        trans = lam * R.lambdas[-1]
        checks.append(check_le("lambda1* * lambda_2n >= 1", 1, trans))
    return DualResult(lam, witness, trans, checks)


def duality_checks(L: LatticeInstance) -> list[Check]:
    """Tie the structural dual description to the inverse transpose of the basis."""
    p = L.ctx.p
    Bm = L.basis_matrix.tolist()
    Bstar = _transpose(fraction_inverse(Bm))
    in_grid = all((v * p).denominator == 1 for r in Bstar for v in r)
    G = [[Fraction(int(v), p) for v in r] for r in dual_generators(L).tolist()]
    # G B^T must be integral with det +-1 when G generates the dual of rows(B)
    pairing = fraction_matmul(G, _transpose(Bm))
    # and the dual of rows(G) must be rows(B): (G^{-1})^T B^{-1} unimodular
    double = _transpose(fraction_inverse(G))
    relate = fraction_matmul(double, fraction_inverse(Bm))
    return [
        Check("dual inside (1/p)Z^2n", int(not in_grid), 0, in_grid, True),
        Check("dual generators pair unimodularly", 0, 0, _is_unimodular(pairing), True),
        Check("double dual equals lattice", 0, 0, _is_unimodular(relate), True),
    ]


def analyse(ctx: FieldCtx, basis: Basis, z: int, H, with_dual: bool = True) -> dict:
    """Minima, Minkowski sandwich, point count, floor and dual checks for one z."""
    L = build_lambda_z(ctx, basis, z, H)
    R = successive_minima(L)
    checks = [Check("|det| = p^n", abs(L.determinant()), ctx.p**ctx.n,
                    abs(L.determinant()) == ctx.p**ctx.n, True)]
    if R.complete:
        checks += minkowski_check(R, L)
        checks.append(span_property_check(L, R))
    R.point_count = count_points(L, 1)
    if ctx.n >= 2 and int(ctx.subfield_degree(z)) != 1 and R.lambdas:
        checks.append(lambda1_floor_check(L, R))
    dual = None
    if with_dual:
        dual = dual_first_minimum(L, R if R.complete else None)
        R.dual_lambda1 = dual.lambda1
        checks += dual.checks
    return {"instance": L, "minima": R, "dual": dual, "checks": checks}
