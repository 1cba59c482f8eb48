"""The Hermitian polar space H(n, q^2) on V = F_{q^2} x F_{q^2n}.

The form is h((a, x)) = a^(q+1) - Tr(x^(q^n + 1)) with Tr the trace from
F_{q^2n} down to F_{q^2}.  Perpendicularity uses the polarization

    b((a, x), (c, y)) = a c^q - Tr(x y^(q^n)),

which is linear in the first slot, q-semilinear in the second and satisfies
b(v, v) = h(v).

Projective points are stored canonically as `Point(a, x)`: a = 1 when the
first coordinate is nonzero, otherwise x is the F_{q^2}*-multiple with the
least encoding.  Canonical points compare and hash directly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .errors import BudgetExceeded, GeometryError
from .gf import FieldCtx

POINT_ENUMERATION_CAP = 1 << 21


class Point(NamedTuple):
    a: int
    x: int

    def to_json(self, ctx: FieldCtx) -> list:
        return [ctx.coeffs(self.a), ctx.coeffs(self.x)]

    @classmethod
    def from_json(cls, ctx: FieldCtx, data) -> "Point":
        a, x = data
        return canonical(ctx, ctx.from_coeffs(a), ctx.from_coeffs(x))


def _q2_step(ctx: FieldCtx) -> int:
    return ctx.mult_order // (ctx.q**2 - 1)


def q2_elements(ctx: FieldCtx) -> list[int]:
    """F_{q^2} as codes of the ambient field, 0 first."""
    return ctx.subfield_elements(2 * ctx.d)


def canonical(ctx: FieldCtx, a: int, x: int) -> Point:
    if a == 0 and x == 0:
        raise GeometryError("the zero vector is not a projective point")
    if a != 0:
        if a == 1:
            return Point(1, x)
        return Point(1, ctx.mul(x, ctx.inv(a)))
    if ctx.has_tables:
        step = _q2_step(ctx)
        ks = (ctx.log_table[x] + step * np.arange(ctx.q**2 - 1, dtype=np.int64)) % ctx.mult_order
        return Point(0, int(ctx.exp_table[ks].min()))
    return Point(0, min(ctx.mul(lam, x) for lam in q2_elements(ctx)[1:]))


def herm_value(ctx: FieldCtx, v) -> int:
    a, x = v
    norm_a = ctx.pow(a, ctx.q + 1)
    norm_x = ctx.pow(x, ctx.q**ctx.n + 1)
    return ctx.sub(norm_a, ctx.trace(norm_x, 2 * ctx.d))


def herm_pair(ctx: FieldCtx, u, v) -> int:
    a, x = u
    c, y = v
    left = ctx.mul(a, ctx.pow(c, ctx.q))
    right = ctx.trace(ctx.mul(x, ctx.pow(y, ctx.q**ctx.n)), 2 * ctx.d)
    return ctx.sub(left, right)


def is_singular(ctx: FieldCtx, P) -> bool:
    return herm_value(ctx, P) == 0


def perp(ctx: FieldCtx, P, Q) -> bool:
    return herm_pair(ctx, P, Q) == 0


# ---- vectorised forms -------------------------------------------------------


def pairing_maps(ctx: FieldCtx, P) -> tuple[np.ndarray, np.ndarray]:
    """Linear maps (L1, L2) with b(P, (c, y)) = L1 c - L2 y on digit vectors."""
    a, x = P
    L1 = ctx.mul_matrix(a) @ ctx.frobenius_matrix(ctx.d) % ctx.p
    L2 = ctx.trace_matrix(2 * ctx.d) @ ctx.mul_matrix(x) @ ctx.frobenius_matrix(ctx.n * ctx.d) % ctx.p
    return L1, L2


def pairing_rows(ctx: FieldCtx, P, A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Digit rows of b(P, Q) for the points Q with digit rows (A, X)."""
    L1, L2 = pairing_maps(ctx, P)
    return (ctx.apply(L1, A) - ctx.apply(L2, X)) % ctx.p


def perp_mask(ctx: FieldCtx, P, A: np.ndarray, X: np.ndarray) -> np.ndarray:
    return ~pairing_rows(ctx, P, A, X).any(axis=-1)


def herm_value_rows(ctx: FieldCtx, A: np.ndarray, X: np.ndarray) -> np.ndarray:
    norm_a = ctx.mul_rows(A, ctx.apply(ctx.frobenius_matrix(ctx.d), A))
    norm_x = ctx.mul_rows(X, ctx.apply(ctx.frobenius_matrix(ctx.n * ctx.d), X))
    return (norm_a - ctx.apply(ctx.trace_matrix(2 * ctx.d), norm_x)) % ctx.p


# ---- point sets --------------------------------------------------------------


@dataclass(frozen=True)
class PointSet:
    """A sorted, duplicate-free tuple of canonical points."""

    ctx: FieldCtx = field(repr=False, compare=False)
    points: tuple[Point, ...]

    @classmethod
    def of(cls, ctx: FieldCtx, points: Iterable) -> "PointSet":
        return cls(ctx, tuple(sorted({Point(*P) for P in points})))

    @classmethod
    def from_x_codes(cls, ctx: FieldCtx, codes) -> "PointSet":
        """Points <(1, x)> for the given x codes."""
        return cls(ctx, tuple(Point(1, int(x)) for x in np.unique(np.asarray(codes, dtype=np.int64))))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __contains__(self, P) -> bool:
        return Point(*P) in self._members

    @cached_property
    def _members(self) -> frozenset:
        return frozenset(self.points)

    @cached_property
    def a_codes(self) -> np.ndarray:
        return np.array([P.a for P in self.points], dtype=np.int64)

    @cached_property
    def x_codes(self) -> np.ndarray:
        return np.array([P.x for P in self.points], dtype=np.int64)

    @cached_property
    def digits(self) -> tuple[np.ndarray, np.ndarray]:
        return self.ctx.decode(self.a_codes), self.ctx.decode(self.x_codes)

    def index(self, P) -> int:
        return self.points.index(Point(*P))


# ---- enumeration ---------------------------------------------------------------


def vec_add(ctx: FieldCtx, u, v):
    return (ctx.add(u[0], v[0]), ctx.add(u[1], v[1]))


def vec_scale(ctx: FieldCtx, lam: int, v):
    return (ctx.mul(lam, v[0]), ctx.mul(lam, v[1]))


def standard_basis(ctx: FieldCtx) -> list[tuple[int, int]]:
    """An F_{q^2}-basis of V: (1, 0) and (0, theta^i) for i < n.

    theta generates F_{q^n}*, so it has degree n over F_q and, n being odd,
    also over F_{q^2}.
    """
    theta = ctx.subfield_generator(ctx.n * ctx.d)
    basis = [(1, 0)]
    t = 1
    for _ in range(ctx.n):
        basis.append((0, t))
        t = ctx.mul(t, theta)
    return basis


def _kernel(ctx: FieldCtx, rows: list[list[int]]) -> list[list[int]]:
    """Null space basis of a matrix over F_{q^2} (entries are field codes)."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = ctx.inv(rows[r][c])
        rows[r] = [ctx.mul(inv, v) for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [ctx.sub(v, ctx.mul(f, w)) for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * ncols
        vec[fc] = 1
        for i, pc in enumerate(pivots):
            vec[pc] = ctx.neg(rows[i][fc])
        basis.append(vec)
    return basis


def _combine(ctx: FieldCtx, coeffs, vectors):
    out = (0, 0)
    for c, v in zip(coeffs, vectors):
        if c:
            out = vec_add(ctx, out, vec_scale(ctx, c, v))
    return out


def perp_subspace(ctx: FieldCtx, points) -> list[tuple[int, int]]:
    """Vector basis of the common perp of the given points."""
    basis = standard_basis(ctx)
    rows = [[herm_pair(ctx, e, P) for e in basis] for P in points]
    return [_combine(ctx, k, basis) for k in _kernel(ctx, rows)]


def span_points(ctx: FieldCtx, vectors) -> list[Point]:
    """All projective points of the span of independent vectors."""
    k = len(vectors)
    field_q2 = q2_elements(ctx)
    count = sum(len(field_q2) ** i for i in range(k))
    if count > POINT_ENUMERATION_CAP:
        raise BudgetExceeded(f"span has {count} points")
    out = []
    for lead in range(k):
        for tail in _tuples(field_q2, k - lead - 1):
            coeffs = [0] * lead + [1] + list(tail)
            out.append(canonical(ctx, *_combine(ctx, coeffs, vectors)))
    return out


def _tuples(values, length):
    if length == 0:
        yield ()
        return
    for head in values:
        for rest in _tuples(values, length - 1):
            yield (head,) + rest


def all_points(ctx: FieldCtx) -> list[Point]:
    """Every projective point of PG(V)."""
    count = (ctx.q ** (2 * ctx.n + 2) - 1) // (ctx.q**2 - 1)
    if count > POINT_ENUMERATION_CAP:
        raise BudgetExceeded(f"PG({ctx.n},{ctx.q}^2) has {count} points")
    pts = [Point(1, x) for x in range(ctx.order)]
    step = _q2_step(ctx)
    pts.extend(sorted({canonical(ctx, 0, ctx.exp(k)) for k in range(step)}))
    return pts


def singular_points(ctx: FieldCtx) -> list[Point]:
    pts = all_points(ctx)
    A = ctx.decode([P.a for P in pts])
    X = ctx.decode([P.x for P in pts])
    keep = ~herm_value_rows(ctx, A, X).any(axis=-1)
    return [P for P, k in zip(pts, keep) if k]


def random_singular_point(ctx: FieldCtx, rng: random.Random) -> Point:
    q2 = q2_elements(ctx)
    while True:
        a = rng.choice(q2)
        x = rng.randrange(ctx.order)
        if a == 0 and x == 0:
            continue
        P = canonical(ctx, a, x)
        if is_singular(ctx, P):
            return P


# ---- classical ovoids and lines (n = 3) -------------------------------------


def _require_n3(ctx: FieldCtx):
    if ctx.n != 3:
        raise GeometryError("only implemented for H(3, q^2)")


def classical_ovoid(ctx: FieldCtx, P) -> PointSet:
    """Singular points of P^perp for a nonsingular point P of H(3, q^2)."""
    _require_n3(ctx)
    P = canonical(ctx, *P)
    if is_singular(ctx, P):
        raise GeometryError("classical ovoid needs a nonsingular point")
    plane = span_points(ctx, perp_subspace(ctx, [P]))
    A = ctx.decode([R.a for R in plane])
    X = ctx.decode([R.x for R in plane])
    keep = ~herm_value_rows(ctx, A, X).any(axis=-1)
    return PointSet.of(ctx, [R for R, k in zip(plane, keep) if k])


@dataclass(frozen=True)
class ProjLine:
    """A line of PG(3, q^2): two spanning points and all q^2 + 1 points."""

    spanning: tuple[Point, Point]
    points: frozenset = field(compare=True)

    def __contains__(self, P) -> bool:
        return Point(*P) in self.points

    def __eq__(self, other):
        return isinstance(other, ProjLine) and self.points == other.points

    def __hash__(self):
        return hash(self.points)


def points_on_line(ctx: FieldCtx, P, Q) -> list[Point]:
    _require_n3(ctx)
    P, Q = canonical(ctx, *P), canonical(ctx, *Q)
    if P == Q:
        raise GeometryError("a line needs two distinct points")
    out = [P]
    for lam in q2_elements(ctx):
        out.append(canonical(ctx, *vec_add(ctx, Q, vec_scale(ctx, lam, P))))
    return sorted(set(out))


def line_through(ctx: FieldCtx, P, Q) -> ProjLine:
    pts = points_on_line(ctx, P, Q)
    return ProjLine((canonical(ctx, *P), canonical(ctx, *Q)), frozenset(pts))


def line_perp(ctx: FieldCtx, line: ProjLine) -> ProjLine:
    """The line of points perpendicular to every point of `line`."""
    _require_n3(ctx)
    u, v = perp_subspace(ctx, list(line.spanning))
    return line_through(ctx, canonical(ctx, *u), canonical(ctx, *v))
