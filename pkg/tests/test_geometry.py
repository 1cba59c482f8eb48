import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermovoid.errors import GeometryError
from hermovoid.geometry import (
    Point,
    canonical,
    classical_ovoid,
    herm_pair,
    herm_value,
    is_singular,
    line_perp,
    line_through,
    perp,
    points_on_line,
    q2_elements,
    singular_points,
)
from hermovoid.gf import Params, build_field_ctx
from hermovoid.ovoid import verify_ovoid


@pytest.fixture(scope="module")
def small():
    return build_field_ctx(Params(2, 1, 3))


def test_form_examples(small):
    ctx = small
    assert herm_value(ctx, (1, 0)) == 1
    assert herm_value(ctx, (1, 1)) == 0
    assert is_singular(ctx, Point(1, 1)) and not is_singular(ctx, Point(1, 0))
    for t in ctx.subfield_elements(3)[1:]:
        # value of (0, t) is minus the small trace of t^2
        expected = ctx.neg(ctx.trace(ctx.mul(t, t), 1, 3))
        assert herm_value(ctx, (0, t)) == expected
        assert herm_pair(ctx, (1, 0), (0, t)) == 0


def test_value_lies_in_fq():
    ctx = build_field_ctx(Params(3, 1, 3))
    rng = random.Random(0)
    for _ in range(200):
        a = rng.choice(q2_elements(ctx))
        x = rng.randrange(ctx.order)
        assert ctx.in_subfield(herm_value(ctx, (a, x)), ctx.d)


def test_pair_on_singer_points(small):
    ctx = small
    W = [ctx.pow(ctx.omega, i) for i in range(9)]
    for i in range(9):
        for j in range(9):
            expected = ctx.sub(1, ctx.trace(W[(i - j) % 9], 2))
            assert herm_pair(ctx, (1, W[i]), (1, W[j])) == expected
    # perpendicularity among S_1 by direct evaluation
    hits = {(i, j) for i in range(9) for j in range(9) if perp(ctx, Point(1, W[i]), Point(1, W[j]))}
    assert all((j, i) in hits for i, j in hits)
    assert {(i, i) for i in range(9)} == hits  # S_1 is an ovoid at q = 2, n = 3


def test_gamma_point_singular():
    ctx = build_field_ctx(Params(2, 3, 3))
    gamma = ctx.embed_root((1, 0, 0, 0, 1, 0, 0, 0, 0, 1))
    assert is_singular(ctx, Point(1, ctx.pow(gamma, 39)))
    assert is_singular(ctx, Point(1, ctx.pow(gamma, 109)))


@pytest.mark.parametrize("params, count", [((2, 1, 3), 45), ((3, 1, 3), 280)])
def test_singular_point_count(params, count):
    ctx = build_field_ctx(Params(*params))
    q = ctx.q
    assert (q**3 + 1) * (q**2 + 1) == count
    assert len(singular_points(ctx)) == count


def test_canonical_form():
    ctx = build_field_ctx(Params(3, 1, 3))
    rng = random.Random(2)
    scalars = q2_elements(ctx)[1:]
    for _ in range(100):
        a, x = rng.choice([0] + scalars), rng.randrange(1, ctx.order)
        P = canonical(ctx, a, x)
        assert canonical(ctx, *P) == P
        lam = rng.choice(scalars)
        assert canonical(ctx, ctx.mul(lam, a), ctx.mul(lam, x)) == P
        if a:
            assert P.a == 1
    with pytest.raises(GeometryError):
        canonical(ctx, 0, 0)


CTX = build_field_ctx(Params(3, 1, 3))
Q2 = q2_elements(CTX)
vectors = st.tuples(st.sampled_from(Q2), st.integers(0, CTX.order - 1))


@settings(max_examples=200, deadline=None)
@given(vectors, vectors)
def test_polarization(u, v):
    ctx = CTX
    assert herm_pair(ctx, u, u) == herm_value(ctx, u)
    assert ctx.frobenius(herm_pair(ctx, u, v), ctx.d) == herm_pair(ctx, v, u)


@settings(max_examples=100, deadline=None)
@given(vectors, vectors, vectors, st.sampled_from(Q2))
def test_sesquilinearity(u, v, w, lam):
    ctx = CTX
    vw = (ctx.add(v[0], w[0]), ctx.add(v[1], w[1]))
    assert herm_pair(ctx, u, vw) == ctx.add(herm_pair(ctx, u, v), herm_pair(ctx, u, w))
    scaled = (ctx.mul(lam, u[0]), ctx.mul(lam, u[1]))
    assert herm_pair(ctx, scaled, v) == ctx.mul(lam, herm_pair(ctx, u, v))
    scaled = (ctx.mul(lam, v[0]), ctx.mul(lam, v[1]))
    assert herm_pair(ctx, u, scaled) == ctx.mul(ctx.frobenius(lam, ctx.d), herm_pair(ctx, u, v))


@pytest.mark.parametrize("params", [(2, 1, 3), (3, 1, 3)])
def test_classical_ovoid_small(params):
    ctx = build_field_ctx(Params(*params))
    O = classical_ovoid(ctx, Point(1, 0))
    assert len(O) == ctx.q**3 + 1
    assert verify_ovoid(ctx, O).valid
    with pytest.raises(GeometryError):
        classical_ovoid(ctx, Point(1, 1) if ctx.p == 2 else O[0])


def test_classical_ovoid_q8():
    ctx = build_field_ctx(Params(2, 3, 3))
    assert len(classical_ovoid(ctx, Point(1, 0))) == 513


def test_lines(small):
    ctx = small
    O = classical_ovoid(ctx, Point(1, 0))
    pts = singular_points(ctx)
    line = line_through(ctx, pts[0], pts[5])
    assert len(line.points) == ctx.q**2 + 1
    assert line_perp(ctx, line_perp(ctx, line)) == line
    perp_line = line_perp(ctx, line)
    assert all(perp(ctx, P, R) for P in line.spanning for R in perp_line.points)
    secant = line_through(ctx, O[0], O[1])
    assert sum(P in secant for P in O) == ctx.q + 1
    with pytest.raises(GeometryError):
        points_on_line(ctx, pts[0], pts[0])


def test_lines_need_n3():
    ctx = build_field_ctx(Params(2, 1, 5))
    with pytest.raises(GeometryError):
        line_through(ctx, Point(1, 0), Point(0, 1))
