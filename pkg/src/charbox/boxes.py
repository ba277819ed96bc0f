"""Boxes ``B = {sum x_i w_i : N_i < x_i <= N_i + H_i}`` and their character sums."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .chars import Character
from .errors import BudgetExceeded, InputError
from .field import FieldCtx
from .numeric import CycloSum

DEFAULT_POINT_CAP = 10**8
CHUNK = 1 << 20


def _inverse_mod_p(M: np.ndarray, p: int) -> np.ndarray | None:
    """Inverse of a square integer matrix over F_p, or None when singular."""
    n = M.shape[0]
    A = np.concatenate([M % p, np.eye(n, dtype=np.int64)], axis=1).astype(object)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r, col] % p), None)
        if piv is None:
            return None
        A[[col, piv]] = A[[piv, col]]
        A[col] = A[col] * pow(int(A[col, col]), -1, p) % p
        for r in range(n):
            if r != col and A[r, col]:
                A[r] = (A[r] - A[r, col] * A[col]) % p
    return A[:, n:].astype(np.int64)


@dataclass(frozen=True, eq=False)
class Basis:
    """An F_p-basis ``w_1, ..., w_n`` of F_{p^n}, given by element indices."""

    ctx: FieldCtx
    omega: tuple[int, ...]

    def __post_init__(self):
        om = tuple(int(w) for w in self.omega)
        object.__setattr__(self, "omega", om)
        if len(om) != self.ctx.n:
            raise InputError(f"a basis needs exactly n={self.ctx.n} elements")
        self.ctx.check(om)
        if self.inverse is None:
            raise InputError("basis elements are linearly dependent over F_p")

    @classmethod
    def standard(cls, ctx: FieldCtx) -> "Basis":
        return cls(ctx, tuple(ctx.p**i for i in range(ctx.n)))

    @cached_property
    def matrix(self) -> np.ndarray:
        """Row i: polynomial-basis coordinates of w_i."""
        return self.ctx.coords(np.array(self.omega))

    @cached_property
    def inverse(self) -> np.ndarray | None:
        return _inverse_mod_p(self.matrix, self.ctx.p)

    def element(self, x) -> np.ndarray:
        """Indices of ``sum_i x[..., i] w_i`` for integer coordinate arrays."""
        x = np.asarray(x, dtype=np.int64) % self.ctx.p
        return self.ctx.index(x @ self.matrix % self.ctx.p)

    def coordinates(self, elem) -> np.ndarray:
        """Coefficients in [0, p) of elements with respect to this basis."""
        c = self.ctx.coords(elem)
        return c @ self.inverse % self.ctx.p

    def permuted(self, order) -> "Basis":
        return Basis(self.ctx, tuple(self.omega[i] for i in order))

    def to_dict(self) -> dict:
        return {"omega": [self.ctx.format(w) for w in self.omega]}


def grid_points(basis: Basis, ranges: list[np.ndarray], start: int = 0,
                stop: int | None = None) -> np.ndarray:
    """Elements ``sum x_i w_i`` for ``x`` over the product of ``ranges``.

    Row-major order (x_1 slowest).  ``start``/``stop`` select a slice of the
    flattened grid so callers can stream huge boxes in chunks.
    """
    ctx = basis.ctx
    shape = tuple(len(r) for r in ranges)
    total = int(np.prod(shape, dtype=object))
    stop = total if stop is None else min(stop, total)
    flat = np.arange(start, stop, dtype=np.int64)
    multi = np.unravel_index(flat, shape) if shape else ()
    coords = np.zeros((len(flat), ctx.n), dtype=np.int64)
    for i, (r, idx) in enumerate(zip(ranges, multi)):
        xi = np.asarray(r, dtype=np.int64)[idx] % ctx.p
        coords = (coords + xi[:, None] * basis.matrix[i]) % ctx.p
    return ctx.index(coords)


@dataclass(frozen=True, eq=False)
class BoxSpec:
    basis: Basis
    N: tuple[int, ...]
    H: tuple[int, ...]

    def __post_init__(self):
        n = self.basis.ctx.n
        object.__setattr__(self, "N", tuple(int(v) for v in self.N))
        object.__setattr__(self, "H", tuple(int(v) for v in self.H))
        if len(self.N) != n or len(self.H) != n:
            raise InputError(f"N and H need n={n} entries")
        p = self.basis.ctx.p
        if any(not 1 <= h <= p for h in self.H):
            raise InputError(f"side lengths must satisfy 1 <= H_i <= p={p}")

    @classmethod
    def standard(cls, ctx: FieldCtx, H, N=None) -> "BoxSpec":
        return cls(Basis.standard(ctx), tuple(N) if N is not None else (0,) * ctx.n, tuple(H))

    @property
    def ctx(self) -> FieldCtx:
        return self.basis.ctx

    @property
    def size(self) -> int:
        out = 1
        for h in self.H:
            out *= h
        return out

    @property
    def is_sorted(self) -> bool:
        return all(a <= b for a, b in zip(self.H, self.H[1:]))

    def sorted(self) -> "BoxSpec":
        """Same point set with coordinates permuted so that H is ascending."""
        order = sorted(range(len(self.H)), key=lambda i: (self.H[i], i))
        return BoxSpec(self.basis.permuted(order), tuple(self.N[i] for i in order),
                       tuple(self.H[i] for i in order))

    def ranges(self) -> list[np.ndarray]:
        return [np.arange(N + 1, N + H + 1, dtype=np.int64) for N, H in zip(self.N, self.H)]

    def points(self, cap: int = DEFAULT_POINT_CAP) -> np.ndarray:
        if self.size > cap:
            raise BudgetExceeded(f"|B| = {self.size} exceeds the enumeration cap {cap}")
        return grid_points(self.basis, self.ranges())

    def iter_points(self, cap: int = DEFAULT_POINT_CAP, chunk: int = CHUNK):
        if self.size > cap:
            raise BudgetExceeded(f"|B| = {self.size} exceeds the enumeration cap {cap}")
        ranges = self.ranges()
        for start in range(0, self.size, chunk):
            yield grid_points(self.basis, ranges, start, start + chunk)

    def contains_zero(self) -> bool:
        p = self.ctx.p
        return all(any((N + j) % p == 0 for j in range(1, H + 1)) for N, H in zip(self.N, self.H))

    def to_dict(self) -> dict:
        return {"p": self.ctx.p, "n": self.ctx.n, "basis": self.basis.to_dict()["omega"],
                "N": list(self.N), "H": list(self.H), "size": self.size}


@dataclass(frozen=True)
class BoxSum:
    total: CycloSum
    size: int

    @property
    def value(self) -> complex:
        return self.total.complex()

    @property
    def abs(self) -> float:
        return self.total.abs()

    @property
    def normalized(self) -> float:
        return self.abs / self.size

    def to_dict(self) -> dict:
        z = self.value
        out = {"sum": [z.real, z.imag], "abs": self.abs, "size": self.size,
               "normalized": self.normalized, "order": self.total.d}
        ex = self.total.exact()
        if ex is not None:
            out["exact"] = [ex.real, ex.imag] if isinstance(ex, complex) else ex
        return out


def _same_field(box: BoxSpec, chi: Character) -> None:
    if box.ctx is not chi.ctx and (box.ctx.p, box.ctx.modulus) != (chi.ctx.p, chi.ctx.modulus):
        raise InputError("box and character live over different fields")


def box_char_sum(box: BoxSpec, chi: Character, cap: int = DEFAULT_POINT_CAP) -> BoxSum:
    """``sum_{x in B} chi(x)`` by exhaustive enumeration of the box."""
    _same_field(box, chi)
    total = CycloSum.zero(chi.order)
    for pts in box.iter_points(cap):
        total = total + chi.sum(pts)
    return BoxSum(total, box.size)


def sublattice_char_sum(box: BoxSpec, chi: Character, k: int,
                        cap: int = DEFAULT_POINT_CAP) -> BoxSum:
    """Sum over the first k coordinates only, the rest fixed at zero."""
    _same_field(box, chi)
    n = box.ctx.n
    if not 1 <= k <= n:
        raise InputError(f"k must lie in [1, {n}]")
    ranges = box.ranges()[:k] + [np.zeros(1, dtype=np.int64)] * (n - k)
    size = 1
    for h in box.H[:k]:
        size *= h
    if size > cap:
        raise BudgetExceeded(f"sublattice sum has {size} points, cap {cap}")
    total = CycloSum.zero(chi.order)
    for start in range(0, size, CHUNK):
        total = total + chi.sum(grid_points(box.basis, ranges, start, start + CHUNK))
    return BoxSum(total, size)
