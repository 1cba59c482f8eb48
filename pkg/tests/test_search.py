import json

import pytest

from hermovoid.formats import dumps
from hermovoid.geometry import Point, is_singular
from hermovoid.gf import Params, build_field_ctx
from hermovoid.group import act, canonical_image, group_elements, orbit
from hermovoid.ovoid import construct_q8, construct_singer_type
from hermovoid.search import (
    PRUNING_LEMMAS,
    SearchOptions,
    brute_force_classes,
    dedupe_by_G,
    enumerate_params,
    enumerate_seeds,
    prune_reason,
    run_search,
    scan_unit,
)


def keys(report):
    return [tuple(f.points.points) for f in report.found]


def test_param_examples():
    specs = enumerate_params(Params(2, 3, 3), pruning=(), include_s1=True)
    assert {s.s for s in specs} == {1, 3, 9}
    assert {s.s for s in enumerate_params(Params(2, 2, 3), pruning=(), include_s1=True)} == {1}
    assert {s.s for s in enumerate_params(Params(11, 1, 3), pruning=(), include_s1=True)} <= {1, 2, 3, 6}
    for spec in specs:
        assert spec.m * spec.k * spec.s == 18
    assert all(s.s > 1 for s in enumerate_params(Params(2, 3, 3), include_s1=False))


def test_param_enumeration_is_complete_small():
    params = Params(2, 3, 3)
    N, Q = 18, 513
    from hermovoid.group import SubgroupSpec

    expected = set()
    for s in range(1, Q + 1):
        for k in range(1, N + 1):
            for j in range(s):
                if Q % s or N % k or N % (k * s):
                    continue
                if ((2**N - 1) // (2**k - 1)) * j % s == 0:
                    expected.add(SubgroupSpec.create(params, s, k, j))
    assert set(enumerate_params(params, pruning=(), include_s1=True)) == expected


def test_pruning_rules():
    p233 = Params(2, 3, 3)
    assert prune_reason(p233, 3, 1, 6, PRUNING_LEMMAS) is None  # 2^d < nd: no s bound
    assert prune_reason(Params(2, 4, 3), 3, 1, 8, ("s-bounds",)) == "s-bounds"
    assert prune_reason(Params(2, 4, 3), 3, 1, 8, ("gcd",)) == "gcd"
    assert prune_reason(Params(5, 1, 3), 2, 1, 3, ("s-bounds",)) == "s-bounds"
    assert prune_reason(Params(5, 1, 3), 3, 1, 2, ("s-bounds",)) is None
    assert prune_reason(p233, 2, 1, 9, ("parity",)) == "parity"
    assert prune_reason(p233, 9, 1, 2, PRUNING_LEMMAS) is None
    assert prune_reason(p233, 1, 1, 18, PRUNING_LEMMAS) is None
    p313 = Params(3, 1, 3)
    assert prune_reason(p313, 4, 1, 1, ("parity",)) == "parity"
    assert prune_reason(p313, 2, 1, 3, ("parity",)) is None
    assert prune_reason(Params(7, 1, 3), 2, 1, 3, ("gcd",)) == "gcd"
    assert prune_reason(Params(5, 1, 3), 2, 1, 3, ("gcd",)) is None


def test_seed_examples():
    ctx = build_field_ctx(Params(2, 1, 3))
    classes, raw = enumerate_seeds(ctx)
    singular_f8 = [x for x in ctx.subfield_elements(3)[1:] if ctx.trace(ctx.mul(x, x), 1, 3) == 1]
    assert raw == len(singular_f8) == 4
    assert all(is_singular(ctx, Point(1, c.representative)) for c in classes)
    assert sum(c.size for c in classes) == raw
    covered = set()
    for c in classes:
        members = {act(ctx, g, Point(1, c.representative)) for g in group_elements(ctx)}
        covered |= {P.x for P in members if P.x in singular_f8}
        assert c.representative == min(P.x for P in members if P.x in singular_f8)
    assert covered == set(singular_f8)


def test_seed_counts_odd():
    ctx = build_field_ctx(Params(3, 1, 3))
    classes, raw = enumerate_seeds(ctx)
    direct = [
        y
        for x in ctx.subfield_elements(3)[1:]
        for y in (x, ctx.mul(x, ctx.omega0))
        if is_singular(ctx, Point(1, y))
    ]
    assert raw == len(direct) <= 2 * (27 - 1)
    assert sum(c.size for c in classes) == raw


def test_kernel_agrees_with_orbit_check():
    from hermovoid.ovoid import verify_ovoid

    for params in [(2, 1, 3), (3, 1, 3), (2, 1, 5)]:
        ctx = build_field_ctx(Params(*params))
        classes, _ = enumerate_seeds(ctx)
        for spec in enumerate_params(ctx.params, pruning=(), include_s1=True):
            for c in classes:
                P = Point(1, c.representative)
                O = orbit(ctx, spec, P)
                expected = len(O) == ctx.singer_order and verify_ovoid(ctx, O).valid
                assert bool(scan_unit(ctx, spec, [c.representative])) == expected


@pytest.mark.parametrize("params", [(2, 1, 3), (2, 3, 3), (3, 1, 3)])
def test_pruning_does_not_change_results(search, params):
    on, _ = search(params)
    off, _ = search(params, pruning=frozenset())
    assert keys(on) == keys(off)
    assert len(off.specs) >= len(on.specs)


def test_completeness_against_all_subgroups(search):
    report, ctx = search((2, 1, 3))
    assert sorted(brute_force_classes(ctx)) == keys(report)


def test_found_ovoids_are_transitive_and_valid(search):
    for params in [(2, 1, 3), (2, 3, 3), (5, 1, 3)]:
        report, _ = search(params)
        for f in report.found:
            assert f.certificate.valid and f.stabilizer_transitive
            assert f.certificate.size == len(f.points)


def test_q233_frozen_results(search):
    report, ctx = search((2, 3, 3))
    assert len(report.seed_classes) == 8 and report.raw_seed_count == 64
    summary = [(f.certificate.stabilizer_order_in_G, f.line_profile) for f in report.found]
    assert sorted(summary, key=lambda t: (-t[0], sorted(t[1].items()))) == [
        (9234, {2: 504, 9: 1}),
        (1026, {2: 388, 3: 62}),
        (1026, {2: 462, 3: 25}),
        (513, {2: 450, 3: 31}),
    ]
    assert all(not f.classical for f in report.found)
    assert report.invariant_groups() == [[0], [1], [2], [3]]
    found = set(keys(report))
    for O in (construct_singer_type(ctx), construct_q8(ctx, 1), construct_q8(ctx, 2)):
        assert canonical_image(ctx, O) in found


def test_q513_frozen_result(search):
    report, _ = search((5, 1, 3))
    assert [(len(f.points), f.certificate.stabilizer_order_in_G, f.line_profile) for f in report.found] == [
        (126, 252, {2: 104, 3: 8, 6: 1})
    ]


def test_q213_two_G_classes_share_invariants(search):
    report, _ = search((2, 1, 3))
    assert [f.certificate.stabilizer_order_in_G for f in report.found] == [54, 18]
    assert report.invariant_groups() == [[0, 1]]


def test_dedupe_by_G():
    ctx = build_field_ctx(Params(2, 3, 3))
    O1, O2 = construct_q8(ctx, 1), construct_q8(ctx, 2)
    rho = group_elements(ctx)[1]
    from hermovoid.group import image

    assert len(dedupe_by_G(ctx, [O1, image(ctx, rho, O1)])) == 1
    assert len(dedupe_by_G(ctx, [O1, O2])) == 2
    S1 = construct_singer_type(ctx)
    phi = next(g for g in group_elements(ctx) if g.j == 0 and g.i == 1)
    assert image(ctx, phi, S1) == S1
    assert len(dedupe_by_G(ctx, [S1, image(ctx, phi, S1)])) == 1


def test_determinism_across_workers(search):
    one, ctx = search((2, 3, 3))
    two, _ = search((2, 3, 3), workers=2)
    assert dumps(one.to_json(ctx, timing=False)) == dumps(two.to_json(ctx, timing=False))


def test_checkpoint_resume(tmp_path):
    path = tmp_path / "ck.json"
    options = SearchOptions(Params(2, 1, 3), include_s1=True, checkpoint=str(path), seed_chunk=1)
    first, ctx = run_search(options)
    data = json.loads(path.read_text())
    assert data["fingerprint"] == options.fingerprint() and data["completed"]
    second, _ = run_search(options)
    assert dumps(first.to_json(ctx, timing=False)) == dumps(second.to_json(ctx, timing=False))
    other = SearchOptions(Params(2, 1, 3), include_s1=False, checkpoint=str(path))
    assert run_search(other)[0].class_count <= first.class_count


def test_report_json_layout(search):
    report, ctx = search((2, 1, 3))
    data = report.to_json(ctx, timing=False)
    assert "elapsed_seconds" not in data
    assert data["equivalence"] == "G" and data["found_count"] == 2
    assert data["found"][0]["ovoid"]["points"]
    assert json.loads(dumps(data)) == data
