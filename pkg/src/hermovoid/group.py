"""The group G = <rho, phi> of order 2nd(q^n + 1) acting on H(n, q^2).

rho: (a, x) -> (a, omega x) and phi: (a, x) -> (a^p, x^p).  Elements are
kept in the normal form rho^j phi^i and multiplied with phi rho phi^-1 = rho^p:

    (j1, i1) * (j2, i2) = (j1 + j2 p^i1 mod q^n+1, i1 + i2 mod 2nd).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import BudgetExceeded, GeometryError, GroupError
from .geometry import Point, PointSet, canonical, is_singular
from .gf import FieldCtx, Params, matmul_mod

STABILIZER_CAP = 10**6


class GroupElt(NamedTuple):
    j: int
    i: int

    def to_json(self) -> dict:
        return {"j": self.j, "i": self.i}

    @classmethod
    def from_json(cls, data) -> "GroupElt":
        return cls(int(data["j"]), int(data["i"]))


IDENTITY = GroupElt(0, 0)
RHO = GroupElt(1, 0)
PHI = GroupElt(0, 1)


def normalize(ctx: FieldCtx, g) -> GroupElt:
    return GroupElt(g[0] % ctx.singer_order, g[1] % ctx.degree)


def compose(ctx: FieldCtx, g, h) -> GroupElt:
    Q = ctx.singer_order
    return GroupElt((g[0] + h[0] * pow(ctx.p, g[1], Q)) % Q, (g[1] + h[1]) % ctx.degree)


def inverse(ctx: FieldCtx, g) -> GroupElt:
    Q, N = ctx.singer_order, ctx.degree
    i = g[1] % N
    return GroupElt((-g[0] * pow(ctx.p, (N - i) % N, Q)) % Q, (-i) % N)


def geometric_sum(p: int, k: int, count: int, modulus: int) -> int:
    """(p^(k count) - 1) / (p^k - 1) reduced mod `modulus`, computed exactly."""
    if k == 0:
        return count % modulus
    base = p**k - 1
    r = pow(p, k * count, base * modulus)
    return ((r - 1) // base) % modulus


def power(ctx: FieldCtx, g, e: int) -> GroupElt:
    """(rho^l phi^k)^e = rho^(l (p^(ke) - 1)/(p^k - 1)) phi^(ke)."""
    if e < 0:
        return power(ctx, inverse(ctx, g), -e)
    Q, N = ctx.singer_order, ctx.degree
    l, k = g[0] % Q, g[1] % N
    return GroupElt(l * geometric_sum(ctx.p, k, e, Q) % Q, k * e % N)


def elt_order(ctx: FieldCtx, g) -> int:
    Q, N = ctx.singer_order, ctx.degree
    l, k = g[0] % Q, g[1] % N
    i0 = N // math.gcd(k, N)
    rho_part = l * geometric_sum(ctx.p, k, i0, Q) % Q
    return i0 * (Q // math.gcd(rho_part, Q))


def eta(ctx: FieldCtx, g) -> int:
    """The Frobenius exponent of g; kernel <rho>."""
    return g[1] % ctx.degree


def group_order(ctx: FieldCtx) -> int:
    return ctx.degree * ctx.singer_order


def group_elements(ctx: FieldCtx, cap: int = STABILIZER_CAP) -> list[GroupElt]:
    if group_order(ctx) > cap:
        raise BudgetExceeded(f"|G| = {group_order(ctx)} exceeds the cap {cap}")
    return [GroupElt(j, i) for i in range(ctx.degree) for j in range(ctx.singer_order)]


def act(ctx: FieldCtx, g, P) -> Point:
    j, i = g
    a, x = P
    e = ctx.p ** (i % ctx.degree)
    a2 = ctx.pow(a, e)
    x2 = ctx.mul(ctx.pow(ctx.omega, j), ctx.pow(x, e))
    return canonical(ctx, a2, x2)


def closure(ctx: FieldCtx, gens: Iterable) -> frozenset:
    """Element set of the subgroup generated by `gens`."""
    gens = [normalize(ctx, g) for g in gens]
    seen = {IDENTITY}
    frontier = [IDENTITY]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                c = compose(ctx, h, g)
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    return frozenset(seen)


# ---- subgroups <rho^s, rho^j phi^k> -------------------------------------------


@dataclass(frozen=True, order=True)
class SubgroupSpec:
    """H = <rho^s, rho^j phi^k> with H meet <rho> = <rho^s> and |H| = m (q^n + 1)."""

    s: int
    k: int
    j: int
    m: int

    @classmethod
    def create(cls, params: Params, s: int, k: int, j: int) -> "SubgroupSpec":
        N, Q = params.degree, params.singer_order
        if s < 1 or Q % s:
            raise GroupError(f"s={s} does not divide q^n+1={Q}")
        if k < 1 or N % k:
            raise GroupError(f"k={k} does not divide 2nd={N}")
        if N % (k * s):
            raise GroupError(f"k*s={k * s} does not divide 2nd={N}")
        if not 0 <= j < s:
            raise GroupError(f"j={j} must lie in [0, s)")
        if ((params.p**N - 1) // (params.p**k - 1)) * j % s:
            raise GroupError("(p^2nd - 1)/(p^k - 1) * j is not 0 mod s")
        return cls(s, k, j, N // (k * s))

    def order(self, params: Params) -> int:
        return self.m * params.singer_order

    def generators(self) -> tuple[GroupElt, GroupElt]:
        return GroupElt(self.s, 0), GroupElt(self.j, self.k)

    def to_json(self) -> dict:
        return {"s": self.s, "k": self.k, "j": self.j, "m": self.m}

    @classmethod
    def from_json(cls, params: Params, data) -> "SubgroupSpec":
        spec = cls.create(params, int(data["s"]), int(data["k"]), int(data["j"]))
        if "m" in data and int(data["m"]) != spec.m:
            raise GroupError("inconsistent m in subgroup description")
        return spec


def subgroup_elements(ctx: FieldCtx, spec: SubgroupSpec) -> list[GroupElt]:
    """All rho^(sa) (rho^j phi^k)^b, a < (q^n+1)/s, b < 2nd/k, sorted."""
    Q, N = ctx.singer_order, ctx.degree
    out = set()
    for b in range(N // spec.k):
        shift = spec.j * geometric_sum(ctx.p, spec.k, b, Q)
        for a in range(Q // spec.s):
            out.add(GroupElt((spec.s * a + shift) % Q, spec.k * b % N))
    return sorted(out)


def _omega_power_rows(ctx: FieldCtx, s: int) -> np.ndarray:
    key = ("omega_powers", s)
    if key not in ctx._cache:
        ctx._cache[key] = ctx.powers(ctx.pow(ctx.omega, s), ctx.singer_order // s)
    return ctx._cache[key]


def orbit_bases(ctx: FieldCtx, spec: SubgroupSpec, y: int) -> list[int]:
    """z_b = (rho^j phi^k)^b applied to y, one per coset of <rho^s>."""
    Q = ctx.singer_order
    out = []
    for b in range(ctx.degree // spec.k):
        shift = spec.j * geometric_sum(ctx.p, spec.k, b, Q)
        out.append(ctx.mul(ctx.pow(ctx.omega, shift), ctx.frobenius(y, spec.k * b)))
    return out


def orbit_codes(ctx: FieldCtx, spec: SubgroupSpec, y: int) -> np.ndarray:
    """Sorted x-codes of the H-orbit of <(1, y)>."""
    W = _omega_power_rows(ctx, spec.s)
    chunks = [ctx.encode(ctx.apply(ctx.mul_matrix(z), W)) for z in orbit_bases(ctx, spec, y)]
    return np.unique(np.concatenate(chunks))


def orbit(ctx: FieldCtx, H, P) -> PointSet:
    """Orbit of P under a subgroup given as a SubgroupSpec or an element list."""
    P = canonical(ctx, *P)
    if isinstance(H, SubgroupSpec):
        if P.a == 1:
            return PointSet.from_x_codes(ctx, orbit_codes(ctx, H, P.x))
        H = subgroup_elements(ctx, H)
    return PointSet.of(ctx, (act(ctx, g, P) for g in H))


# ---- Singer orbits --------------------------------------------------------------


@dataclass(frozen=True)
class SingerOrbit:
    """S_y = {<(1, omega^i y)>}: xs[i] is the code of omega^i y."""

    y: int
    xs: tuple[int, ...]
    block_size: int

    @property
    def block_count(self) -> int:
        return len(self.xs) // self.block_size

    def block(self, i: int) -> tuple[int, ...]:
        """L_{i,y} = {omega^(i + t M) y : 0 <= t <= q}, M = (q^n+1)/(q+1)."""
        M = self.block_count
        i %= M
        return tuple(self.xs[i + t * M] for t in range(self.block_size))

    def blocks(self) -> list[tuple[int, ...]]:
        return [self.block(i) for i in range(self.block_count)]

    def point_set(self, ctx: FieldCtx) -> PointSet:
        return PointSet.from_x_codes(ctx, self.xs)


def singer_orbit(ctx: FieldCtx, y: int) -> SingerOrbit:
    if not is_singular(ctx, (1, y)):
        raise GeometryError("Singer orbit base point must be singular")
    W = _omega_power_rows(ctx, 1)
    xs = ctx.encode(ctx.apply(ctx.mul_matrix(y), W))
    return SingerOrbit(y, tuple(int(v) for v in xs), ctx.q + 1)


# ---- set stabilizers in G -----------------------------------------------------------


def set_stabilizer_in_G(ctx: FieldCtx, S: PointSet, cap: int = STABILIZER_CAP):
    """(order, generators) of {g in G : g(S) = S}, by exhaustion over G."""
    if group_order(ctx) > cap:
        raise BudgetExceeded(f"|G| = {group_order(ctx)} exceeds the cap {cap}")
    elements = stabilizer_elements(ctx, S, cap)
    return len(elements), _generating_set(ctx, elements)


def stabilizer_elements(ctx: FieldCtx, S: PointSet, cap: int = STABILIZER_CAP) -> list[GroupElt]:
    if group_order(ctx) > cap:
        raise BudgetExceeded(f"|G| = {group_order(ctx)} exceeds the cap {cap}")
    if len(S) == 0:
        return group_elements(ctx, cap)
    if all(P.a == 1 for P in S):
        return _stabilizer_affine(ctx, S)
    return _stabilizer_generic(ctx, S)


def _stabilizer_affine(ctx: FieldCtx, S: PointSet) -> list[GroupElt]:
    members = S.x_codes  # sorted
    X = ctx.decode(members)
    W = _omega_power_rows(ctx, 1)
    out = []
    for i in range(ctx.degree):
        Xi = ctx.apply(ctx.frobenius_matrix(i), X)
        first = ctx.encode(ctx.apply(ctx.mul_matrix(int(ctx.encode(Xi[0]))), W))
        for j in np.flatnonzero(np.isin(first, members)):
            image = ctx.encode(ctx.apply(ctx.mul_matrix(ctx.pow(ctx.omega, int(j))), Xi))
            if np.isin(image, members).all():
                out.append(GroupElt(int(j), i))
    return out


def _stabilizer_generic(ctx: FieldCtx, S: PointSet) -> list[GroupElt]:
    out = []
    for g in group_elements(ctx):
        if all(act(ctx, g, P) in S for P in S):
            out.append(g)
    return out


def _generating_set(ctx: FieldCtx, elements) -> list[GroupElt]:
    gens: list[GroupElt] = []
    generated = {IDENTITY}
    for g in sorted(elements, key=lambda h: (elt_order(ctx, h) * -1, h)):
        if g not in generated:
            gens.append(g)
            generated = closure(ctx, gens)
            if len(generated) == len(elements):
                break
    return gens


# ---- canonical images under G -------------------------------------------------------


def image(ctx: FieldCtx, g, S: PointSet) -> PointSet:
    return PointSet.of(ctx, (act(ctx, g, P) for P in S))


def canonical_image(ctx: FieldCtx, S: PointSet, cap: int = STABILIZER_CAP * 64) -> tuple:
    """Lexicographically least sorted g(S) over g in G, as a tuple of points.

    Two point sets are G-equivalent exactly when their canonical images agree.
    """
    work = group_order(ctx) * max(len(S), 1)
    if work > cap:
        raise BudgetExceeded(f"canonical image needs {work} point images (cap {cap})")
    if len(S) and all(P.a == 1 for P in S):
        return tuple(Point(1, int(x)) for x in _least_affine_image(ctx, S))
    return min(tuple(image(ctx, g, S).points) for g in group_elements(ctx))


def _least_affine_image(ctx: FieldCtx, S: PointSet, chunk_rows: int = 1 << 22) -> np.ndarray:
    N, Q = ctx.degree, ctx.singer_order
    if ctx.has_tables and S.x_codes.all():
        return _least_affine_image_logs(ctx, S)
    W = _omega_power_rows(ctx, 1)
    # T[:, j*N:(j+1)*N] maps digits of x to digits of omega^j x
    T = np.concatenate([ctx.mul_matrix(int(c)).T for c in ctx.encode(W)], axis=1)
    X = ctx.decode(S.x_codes)
    per_chunk = max(1, chunk_rows // max(len(S), 1))
    best = None
    for i in range(N):
        Xi = ctx.apply(ctx.frobenius_matrix(i), X)
        for lo in range(0, Q, per_chunk):
            hi = min(Q, lo + per_chunk)
            img = matmul_mod(Xi, T[:, lo * N : hi * N], ctx.p)
            codes = ctx.encode(img.reshape(len(S), hi - lo, N)).T
            codes = np.sort(codes, axis=1)
            cand = codes[np.lexsort(codes.T[::-1])[0]]
            if best is None or tuple(cand) < tuple(best):
                best = cand
    return best


def _least_affine_image_logs(ctx: FieldCtx, S: PointSet) -> np.ndarray:
    # rho^j phi^i acts on discrete logs as e -> e p^i + j e_omega
    M = ctx.mult_order
    logs = ctx.log_table[S.x_codes]
    shifts = (np.arange(ctx.singer_order, dtype=np.int64) * ctx.e_omega)[:, None]
    best = None
    for i in range(ctx.degree):
        li = logs * pow(ctx.p, i, M) % M
        codes = np.sort(ctx.exp_table[(li[None, :] + shifts) % M], axis=1)
        cand = codes[np.lexsort(codes.T[::-1])[0]]
        if best is None or tuple(cand) < tuple(best):
            best = cand
    return best
