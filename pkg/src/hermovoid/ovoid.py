"""Ovoid verification, intersection profiles and the named constructions."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GeometryError, VerificationError
from .geometry import (
    Point,
    PointSet,
    ProjLine,
    canonical,
    herm_value_rows,
    is_singular,
    line_perp,
    line_through,
    perp_mask,
    perp_subspace,
    random_singular_point,
    singular_points,
)
from .gf import FieldCtx
from .group import (
    SubgroupSpec,
    act,
    orbit,
    singer_orbit,
    subgroup_elements,
)

Q8_MINPOLY = (1, 0, 0, 0, 1, 0, 0, 0, 0, 1)  # X^9 + X^4 + 1, ascending
Q8_PRESENTATIONS = {1: ((9, 2, 3), 39), 2: ((9, 1, 0), 109)}
PROFILE_EXHAUSTIVE_MAX_Q = 4
PROFILE_SAMPLE = 100


@dataclass
class Certificate:
    valid: bool
    size: int
    expected_size: int
    first_failure: tuple[int, int] | None = None
    transitive_fast_path_used: bool = False
    stabilizer_order_in_G: int | None = None
    reason: str = ""

    def to_json(self) -> dict:
        data = asdict(self)
        if self.first_failure is not None:
            data["first_failure"] = list(self.first_failure)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "Certificate":
        data = dict(data)
        if data.get("first_failure") is not None:
            data["first_failure"] = tuple(data["first_failure"])
        return cls(**data)

    def same_verdict(self, other: "Certificate") -> bool:
        """Equality ignoring which verification path produced the record."""
        a, b = self.to_json(), other.to_json()
        a.pop("transitive_fast_path_used")
        b.pop("transitive_fast_path_used")
        return a == b


def _check_singular(ctx: FieldCtx, S: PointSet):
    if not len(S):
        return
    A, X = S.digits
    bad = np.flatnonzero(herm_value_rows(ctx, A, X).any(axis=-1))
    if len(bad):
        raise GeometryError(f"point {int(bad[0])} of the set is not singular")


def _first_perp_pair(ctx: FieldCtx, S: PointSet) -> tuple[int, int] | None:
    A, X = S.digits
    for i in range(len(S) - 1):
        hits = np.flatnonzero(perp_mask(ctx, S[i], A[i + 1 :], X[i + 1 :]))
        if len(hits):
            return i, i + 1 + int(hits[0])
    return None


def verify_ovoid(ctx: FieldCtx, S: PointSet, transitive_hint=None) -> Certificate:
    """Check that S is q^n + 1 singular, pairwise non-perpendicular points.

    `transitive_hint = (spec, base)` claims S is the orbit of `base` under the
    subgroup `spec`.  If the claim holds, only pairs containing `base` are tested.
    A false claim silently falls back to the quadratic check.
    """
    expected = ctx.singer_order
    _check_singular(ctx, S)
    if len(S) != expected:
        return Certificate(False, len(S), expected, reason="wrong size")
    fast = False
    if transitive_hint is not None:
        spec, base = transitive_hint
        base = canonical(ctx, *base)
        if base in S and orbit(ctx, spec, base) == S:
            fast = True
            A, X = S.digits
            hits = np.flatnonzero(perp_mask(ctx, base, A, X))
            if len(hits) == 1:
                return Certificate(True, len(S), expected, transitive_fast_path_used=True)
    failure = _first_perp_pair(ctx, S)
    if failure is None:
        return Certificate(True, len(S), expected, transitive_fast_path_used=fast)
    return Certificate(
        False, len(S), expected, failure, transitive_fast_path_used=fast, reason="perpendicular pair"
    )


# ---- intersection profile -----------------------------------------------------


@dataclass
class ProfileReport:
    checked: int
    histogram: dict[int, int]
    violations: list[tuple[Point, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self, ctx: FieldCtx) -> dict:
        return {
            "checked": self.checked,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "ok": self.ok,
            "violations": [
                {"point": P.to_json(ctx), "observed": obs, "expected": exp}
                for P, obs, exp in self.violations
            ],
        }


def intersection_profile(
    ctx: FieldCtx,
    O: PointSet,
    sample: int | None = None,
    seed: int = 0,
    include_members: bool = True,
) -> ProfileReport:
    """|P^perp meet O| for singular P: 1 on O and q^(n-2) + 1 off it.

    `sample=None` picks exhaustive checking for q <= 4 and 100 random points
    off O otherwise; `sample=0` forces the exhaustive scan.
    """
    if sample is None:
        sample = 0 if ctx.q <= PROFILE_EXHAUSTIVE_MAX_Q else PROFILE_SAMPLE
    if sample == 0:
        points = singular_points(ctx)
    else:
        rng = random.Random(seed)
        points = []
        while len(points) < sample:
            P = random_singular_point(ctx, rng)
            if P not in O:
                points.append(P)
        if include_members:
            points.extend(O.points[: min(len(O), sample)])
    off_value = ctx.q ** (ctx.n - 2) + 1
    A, X = O.digits
    histogram: Counter = Counter()
    violations = []
    for P in points:
        count = int(perp_mask(ctx, P, A, X).sum())
        histogram[count] += 1
        expected = 1 if P in O else off_value
        if count != expected:
            violations.append((P, count, expected))
    return ProfileReport(len(points), dict(histogram), violations)


# ---- named constructions ---------------------------------------------------------


def full_group_spec(ctx: FieldCtx) -> SubgroupSpec:
    """G itself as <rho, phi>."""
    return SubgroupSpec.create(ctx.params, 1, 1, 0)


def construct_singer_type(ctx: FieldCtx) -> PointSet:
    """The G-orbit of <(1, 1)> in H(3, q^2), q even."""
    if ctx.q % 2 or ctx.n != 3:
        raise GeometryError("Singer-type ovoids need q even and n = 3")
    return orbit(ctx, full_group_spec(ctx), Point(1, 1))


def singer_type_presentation(ctx: FieldCtx):
    return full_group_spec(ctx), Point(1, 1)


def q8_presentation(ctx: FieldCtx, variant: int) -> tuple[SubgroupSpec, Point]:
    if ctx.params.as_tuple() != (2, 3, 3):
        raise GeometryError("the exceptional pair lives in H(3, 8^2)")
    if variant not in Q8_PRESENTATIONS:
        raise GeometryError("variant must be 1 or 2")
    (s, k, j), exponent = Q8_PRESENTATIONS[variant]
    gamma = ctx.embed_root(Q8_MINPOLY)
    return SubgroupSpec.create(ctx.params, s, k, j), Point(1, ctx.pow(gamma, exponent))


def construct_q8(ctx: FieldCtx, variant: int) -> PointSet:
    spec, base = q8_presentation(ctx, variant)
    O = orbit(ctx, spec, base)
    if not verify_ovoid(ctx, O, (spec, base)).valid:
        raise VerificationError(f"variant {variant} orbit is not an ovoid")
    return O


# ---- derivation ---------------------------------------------------------------------


def derive(ctx: FieldCtx, O: PointSet, line: ProjLine) -> PointSet:
    """Swap the q + 1 points of O on `line` for the singular points of its perp."""
    if ctx.n != 3:
        raise GeometryError("derivation is implemented for H(3, q^2)")
    on_line = [P for P in O if P in line]
    if len(on_line) != ctx.q + 1:
        raise GeometryError(f"line meets the ovoid in {len(on_line)} points, need q + 1")
    other = line_perp(ctx, line)
    added = [P for P in other.points if is_singular(ctx, P)]
    derived = PointSet.of(ctx, [P for P in O if P not in line] + added)
    cert = verify_ovoid(ctx, derived)
    if not cert.valid:
        raise VerificationError(f"derived set is not an ovoid: {cert.reason}")
    return derived


def line_profile(ctx: FieldCtx, O: PointSet, through: int = 0) -> dict[int, int]:
    """How many lines through O[through] meet O in exactly k points, keyed by k.

    Projectively invariant, so two ovoids with different profiles at every
    point are inequivalent.  For a transitive ovoid one point suffices.
    """
    if ctx.n != 3:
        raise GeometryError("line profiles are implemented for H(3, q^2)")
    base = O[through]
    covered = {base}
    sizes: Counter = Counter()
    for P in O:
        if P in covered:
            continue
        line = line_through(ctx, base, P)
        members = [R for R in O if R in line]
        covered.update(members)
        sizes[len(members)] += 1
    return dict(sorted(sizes.items()))


def is_classical(ctx: FieldCtx, O: PointSet) -> bool:
    """True when the whole set lies in one hyperplane, i.e. has a common perp."""
    return bool(perp_subspace(ctx, O.points))


def secant_lines(ctx: FieldCtx, O: PointSet, limit: int | None = None) -> list[ProjLine]:
    """Lines through O[0] meeting O in exactly q + 1 points."""
    out: list[ProjLine] = []
    covered = {O[0]}
    for P in O.points[1:]:
        if P in covered:
            continue
        line = line_through(ctx, O[0], P)
        members = [R for R in O if R in line]
        covered.update(members)
        if len(members) == ctx.q + 1:
            out.append(line)
            if limit is not None and len(out) >= limit:
                break
    return out


# ---- Singer orbits against T ---------------------------------------------------------


def T_points(ctx: FieldCtx) -> list[Point]:
    """<(0, t)> with t in F_{q^n}* and Tr_{q^n/q}(t^2) = 0."""
    nd, d = ctx.n * ctx.d, ctx.d
    out = set()
    for t in ctx.subfield_elements(nd)[1:]:
        if ctx.trace(ctx.mul(t, t), d, nd) == 0:
            out.add(canonical(ctx, 0, t))
    pts = sorted(out)
    expected = (ctx.q ** (ctx.n - 1) - 1) // (ctx.q - 1)
    if len(pts) != expected:
        raise GeometryError(f"T has {len(pts)} points, expected {expected}")
    return pts


def block_perp_counts(ctx: FieldCtx, R, y: int) -> list[int]:
    """Per block L_{i,y} of S_y, the number of its points perpendicular to R."""
    S = singer_orbit(ctx, y)
    X = ctx.decode(S.xs)
    A = ctx.decode([1] * len(S.xs))
    mask = perp_mask(ctx, R, A, X)
    M = S.block_count
    return [int(mask[i::M].sum()) for i in range(M)]


def frak_O_multiset(ctx: FieldCtx, spec: SubgroupSpec, y: int) -> tuple[Counter, Counter]:
    """The two multisets sum_{i<s} rho^i(O) and sum_{i<s} phi^(ik)(S_y), O = H<(1, y)>."""
    O = orbit(ctx, spec, Point(1, y))
    if len(O) != ctx.singer_order:
        raise GeometryError("the orbit does not have q^n + 1 points")
    Q = ctx.singer_order
    W = ctx.powers(ctx.omega, Q)
    X = ctx.decode(O.x_codes)
    left: Counter = Counter()
    for i in range(spec.s):
        left.update(int(c) for c in ctx.encode(ctx.apply(ctx.mul_matrix(int(ctx.encode(W[i]))), X)))
    right: Counter = Counter()
    for i in range(spec.s):
        base = ctx.frobenius(y, i * spec.k)
        right.update(int(c) for c in ctx.encode(ctx.apply(ctx.mul_matrix(base), W)))
    return left, right


def frak_O_perp_sum(ctx: FieldCtx, spec: SubgroupSpec, y: int, R) -> int:
    """sum_{i<s} |R^perp meet phi^(ik)(S_y)|."""
    return sum(
        sum(block_perp_counts(ctx, R, ctx.frobenius(y, i * spec.k))) for i in range(spec.s)
    )


def orbit_by_elements(ctx: FieldCtx, spec: SubgroupSpec, P) -> PointSet:
    """Orbit computed point by point from the materialized subgroup."""
    return PointSet.of(ctx, (act(ctx, g, P) for g in subgroup_elements(ctx, spec)))
