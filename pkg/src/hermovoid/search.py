"""Exhaustive search for transitive ovoids that are orbits of subgroups of G.

Every candidate subgroup has the shape H = <rho^s, rho^j phi^k> with
m k s = 2nd.  Every candidate ovoid contains a seed <(1, y)> with y in
F_{q^n}* or, for odd q, y in F_{q^n}* omega0.  Seeds are reduced modulo G
first.  This is sound because the set of admissible subgroups is closed under
conjugation by G.

The kernel never materializes a rejected orbit.  For each coset base z of
<rho^s> in the orbit, it looks for omega^(sa) with Tr(y (z omega^-sa)^(q^n)) = 1.
Such a hit means <(1, y)> is perpendicular to a second orbit point.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sympy import divisors

from .errors import BudgetExceeded
from .geometry import Point, PointSet
from .gf import FieldCtx, Params, build_field_ctx
from .group import (
    STABILIZER_CAP,
    SubgroupSpec,
    act,
    canonical_image,
    closure,
    geometric_sum,
    group_elements,
    group_order,
    orbit,
    orbit_bases,
    orbit_codes,
    stabilizer_elements,
    _omega_power_rows,
)
from .ovoid import Certificate, is_classical, line_profile, verify_ovoid

log = logging.getLogger(__name__)

PRUNING_LEMMAS = ("parity", "s-bounds", "gcd")
GCD_EXCEPTIONS = {(3, 1), (5, 1), (11, 1)}
REPORT_FORMAT = 1


# ---- subgroup parameters -----------------------------------------------------------


def prune_reason(params: Params, s: int, k: int, m: int, pruning) -> str | None:
    """Name of the first enabled lemma that excludes (s, k, m), if any."""
    p, d, n, q = params.p, params.d, params.n, params.q
    if s == 1:
        return None
    if "parity" in pruning:
        if q % 2 == 0 and s % 2 == 0:
            return "parity"
        if q % 2 and s % 4 == 0:
            return "parity"
    if "s-bounds" in pruning:
        if q % 2 == 0:
            if 2**d >= n * d and s < q + 1:
                return "s-bounds"
        elif m % 2 or s % 2:
            if s < ((q + 1) // 2 if n == 3 else q):
                return "s-bounds"
        else:
            e = m & -m
            q1 = p ** (d // e)
            if s < (q1 + 1 if n == 3 else 2 * q1):
                return "s-bounds"
    if "gcd" in pruning and n == 3:
        if (p == 2 and d >= 4) or (p % 2 and (p, d) not in GCD_EXCEPTIONS):
            return "gcd"
    return None


def enumerate_params(params: Params, pruning=PRUNING_LEMMAS, include_s1: bool = False) -> list[SubgroupSpec]:
    N, Q = params.degree, params.singer_order
    pruning = frozenset(pruning)
    out = []
    for s in divisors(math.gcd(N, Q)):
        if s == 1 and not include_s1:
            continue
        for k in divisors(N // s):
            m = N // (k * s)
            if prune_reason(params, s, k, m, pruning):
                continue
            step = (params.p**N - 1) // (params.p**k - 1)
            for j in range(s):
                if step * j % s == 0:
                    out.append(SubgroupSpec(s, k, j, m))
    return sorted(out)


def surviving_cases(params: Params) -> dict[int, list[int]]:
    """s -> sorted m values that survive all pruning lemmas with s > 1."""
    out: dict[int, set] = {}
    for spec in enumerate_params(params):
        out.setdefault(spec.s, set()).add(spec.m)
    return {s: sorted(ms) for s, ms in sorted(out.items())}


# ---- seeds -----------------------------------------------------------------------------


@dataclass(frozen=True)
class SeedClass:
    """One G-class of seeds: least-encoded member, orbit key and member count."""

    representative: int
    key: int
    size: int

    def to_json(self) -> dict:
        return {"key": self.key, "representative": self.representative, "size": self.size}


def _seed_candidates(ctx: FieldCtx) -> tuple[np.ndarray, np.ndarray]:
    """Codes and discrete logs of every singular seed."""
    count = ctx.q**ctx.n - 1
    theta = ctx.exp(ctx.e_qn)
    X = ctx.powers(theta, count)
    sq = ctx.powers(ctx.mul(theta, theta), count)
    trace = ctx.trace_matrix(2 * ctx.d)
    one = np.zeros(ctx.degree, dtype=np.int64)
    one[0] = 1
    logs_x = np.arange(count, dtype=object) * ctx.e_qn
    forms = [(X, sq, logs_x)]
    if ctx.q % 2:
        # y = x omega0, y^(q^n+1) = x^2 omega0^(q^n+1)
        shift = ctx.mul_matrix(ctx.pow(ctx.omega0, ctx.singer_order))
        forms.append((ctx.apply(ctx.mul_matrix(ctx.omega0), X), ctx.apply(shift, sq), logs_x + ctx.e_omega0))
    codes, logs = [], []
    for Y, norms, lg in forms:
        singular = (ctx.apply(trace, norms) == one).all(axis=1)
        codes.append(ctx.encode(Y[singular]))
        logs.extend(int(v) % ctx.mult_order for v in lg[singular])
    return np.concatenate(codes), np.array(logs, dtype=object)


def seed_key(ctx: FieldCtx, log_value: int) -> int:
    """Least residue of log * p^b modulo e_omega: equal keys iff G-equivalent."""
    r = log_value % ctx.e_omega
    best = r
    for _ in range(ctx.degree):
        r = r * ctx.p % ctx.e_omega
        best = min(best, r)
    return best


def enumerate_seeds(ctx: FieldCtx) -> tuple[list[SeedClass], int]:
    """G-classes of singular seeds, sorted by representative, and the raw seed count."""
    codes, logs = _seed_candidates(ctx)
    classes: dict[int, list[int]] = {}
    for code, lg in zip(codes.tolist(), logs):
        classes.setdefault(seed_key(ctx, int(lg)), []).append(code)
    out = [SeedClass(min(members), key, len(members)) for key, members in classes.items()]
    out.sort(key=lambda c: c.representative)
    for c in out:
        log.debug("seed class key=%d representative=%d size=%d", c.key, c.representative, c.size)
    return out, len(codes)


# ---- orbit kernel -------------------------------------------------------------------------


class _Kernel:
    """Digit-vector tables shared by every orbit test in one field."""

    def __init__(self, ctx: FieldCtx):
        N, p = ctx.degree, ctx.p
        self.ctx = ctx
        # basis[i] is the matrix of multiplication by X^i
        self.basis = np.stack([ctx.mul_matrix(ctx.pow(ctx.g, i)) for i in range(N)])
        self.omega_rows = _omega_power_rows(ctx, 1)
        self.trace = ctx.trace_matrix(2 * ctx.d)
        self.conj = ctx.frobenius_matrix(ctx.n * ctx.d)
        self.one = np.zeros(N, dtype=np.int64)
        self.one[0] = 1
        self.p = p

    @classmethod
    def of(cls, ctx: FieldCtx) -> "_Kernel":
        if "kernel" not in ctx._cache:
            ctx._cache["kernel"] = cls(ctx)
        return ctx._cache["kernel"]

    def mul_matrix(self, digits: np.ndarray) -> np.ndarray:
        return np.tensordot(digits, self.basis, axes=1) % self.p

    def mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.mul_matrix(u) @ v % self.p

    def bases(self, spec: SubgroupSpec, y: np.ndarray):
        ctx = self.ctx
        Q = ctx.singer_order
        for b in range(ctx.degree // spec.k):
            shift = spec.j * geometric_sum(ctx.p, spec.k, b, Q)
            yield self.mul(self.omega_rows[shift % Q], ctx.frobenius_matrix(spec.k * b) @ y % self.p)


def orbit_survives(ctx: FieldCtx, spec: SubgroupSpec, y: int) -> bool:
    """False as soon as <(1, y)> is perpendicular to another point of its H-orbit."""
    K = _Kernel.of(ctx)
    W = _omega_power_rows(ctx, spec.s)
    Q = ctx.singer_order
    yd = ctx.decode([y])[0]
    for z in K.bases(spec, yd):
        c = K.mul(yd, K.conj @ z % K.p)
        vals = ctx.apply(K.trace @ K.mul_matrix(c) % K.p, W)
        for a in np.flatnonzero((vals == K.one).all(axis=1)):
            other = K.mul(z, K.omega_rows[(-spec.s * int(a)) % Q])
            if not np.array_equal(other, yd):
                return False
    return True


def scan_unit(ctx: FieldCtx, spec: SubgroupSpec, seeds) -> list[int]:
    """Seeds whose orbit under `spec` is a (q^n + 1)-point ovoid."""
    hits = []
    for y in seeds:
        if not orbit_survives(ctx, spec, y):
            continue
        if len(orbit_codes(ctx, spec, y)) != ctx.singer_order:
            continue
        hits.append(int(y))
    return hits


# ---- options, reports and checkpoints -------------------------------------------------------


@dataclass(frozen=True)
class SearchOptions:
    params: Params
    pruning: frozenset = frozenset(PRUNING_LEMMAS)
    include_s1: bool = False
    workers: int = 1
    seed_chunk: int = 512
    checkpoint: str | None = None
    stabilizer_cap: int = STABILIZER_CAP

    def fingerprint(self) -> str:
        data = {
            "params": list(self.params.as_tuple()),
            "pruning": sorted(self.pruning),
            "include_s1": self.include_s1,
            "seed_chunk": self.seed_chunk,
        }
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "include_s1": self.include_s1,
            "params": {"p": self.params.p, "d": self.params.d, "n": self.params.n},
            "pruning": sorted(self.pruning),
            "seed_chunk": self.seed_chunk,
        }


@dataclass
class FoundOvoid:
    spec: SubgroupSpec
    seed: Point
    points: PointSet
    certificate: Certificate
    stabilizer_transitive: bool | None
    witnesses: int
    classical: bool | None = None
    line_profile: dict[int, int] | None = None

    def to_json(self, ctx: FieldCtx) -> dict:
        from .formats import ovoid_to_json

        profile = None
        if self.line_profile is not None:
            profile = {str(k): v for k, v in self.line_profile.items()}
        return {
            "certificate": self.certificate.to_json(),
            "classical": self.classical,
            "line_profile": profile,
            "ovoid": ovoid_to_json(ctx, self.points),
            "seed": self.seed.to_json(ctx),
            "size": len(self.points),
            "spec": self.spec.to_json(),
            "stabilizer_transitive": self.stabilizer_transitive,
            "witnesses": self.witnesses,
        }


@dataclass
class SearchReport:
    options: SearchOptions
    specs: list[SubgroupSpec]
    seed_classes: list[SeedClass]
    raw_seed_count: int
    examined_pairs: int
    found: list[FoundOvoid] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def class_count(self) -> int:
        return len(self.found)

    def invariant_groups(self) -> list[list[int]]:
        """Indices into `found` grouped by (classical, line profile).

        Classes in different groups are projectively inequivalent; classes sharing
        a group may or may not be equivalent.  Empty when profiles are unavailable.
        """
        if any(f.line_profile is None for f in self.found):
            return []
        groups: dict[tuple, list[int]] = {}
        for idx, f in enumerate(self.found):
            key = (f.classical, tuple(sorted(f.line_profile.items())))
            groups.setdefault(key, []).append(idx)
        return sorted(groups.values())

    def to_json(self, ctx: FieldCtx, timing: bool = True) -> dict:
        data = {
            "equivalence": "G",
            "equivalence_note": "classes are up to G only; projectively equivalent but "
            "G-inequivalent ovoids would be listed separately",
            "examined_pairs": self.examined_pairs,
            "examined_specs": [s.to_json() for s in self.specs],
            "format": REPORT_FORMAT,
            "found": [f.to_json(ctx) for f in self.found],
            "found_count": len(self.found),
            "invariant_groups": self.invariant_groups(),
            "options": self.options.to_json(),
            "raw_seed_count": self.raw_seed_count,
            "seed_classes": [c.to_json() for c in self.seed_classes],
        }
        if timing:
            data["elapsed_seconds"] = round(self.elapsed, 3)
        return data


def _load_checkpoint(path: str | None, fingerprint: str) -> dict[str, list[int]]:
    if not path or not os.path.exists(path):
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if data.get("fingerprint") != fingerprint:
        log.warning("checkpoint %s belongs to a different search; ignoring it", path)
        return {}
    return {k: list(v) for k, v in data["completed"].items()}


def _save_checkpoint(path: str, fingerprint: str, params: Params, done: dict[str, list[int]]):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(
            {"completed": done, "fingerprint": fingerprint, "params": list(params.as_tuple())},
            fh,
            sort_keys=True,
        )
    os.replace(tmp, path)


# ---- worker plumbing -------------------------------------------------------------------------

_WORKER_CTX: FieldCtx | None = None


def _init_worker(params_tuple, modulus):
    global _WORKER_CTX
    _WORKER_CTX = FieldCtx(Params(*params_tuple), modulus)


def _run_unit_in_worker(spec: SubgroupSpec, seeds: list[int]) -> list[int]:
    return scan_unit(_WORKER_CTX, spec, seeds)


def _units(specs, seeds, chunk):
    for si, spec in enumerate(specs):
        for lo in range(0, len(seeds), chunk):
            yield f"{si}:{lo}", spec, seeds[lo : lo + chunk]


# ---- driver -----------------------------------------------------------------------------------


def run_search(options: SearchOptions, ctx: FieldCtx | None = None) -> tuple[SearchReport, FieldCtx]:
    start = time.perf_counter()
    ctx = ctx or build_field_ctx(options.params)
    specs = enumerate_params(options.params, options.pruning, options.include_s1)
    classes, raw = enumerate_seeds(ctx)
    seeds = [c.representative for c in classes]
    log.info(
        "search %s: %d subgroup specs, %d seeds in %d G-classes",
        options.params.as_tuple(), len(specs), raw, len(seeds),
    )
    fingerprint = options.fingerprint()
    done = _load_checkpoint(options.checkpoint, fingerprint)
    pending = [(uid, spec, chunk) for uid, spec, chunk in _units(specs, seeds, options.seed_chunk) if uid not in done]

    def record(uid, hits):
        done[uid] = hits
        if options.checkpoint:
            _save_checkpoint(options.checkpoint, fingerprint, options.params, done)

    if options.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(
            max_workers=options.workers,
            initializer=_init_worker,
            initargs=(options.params.as_tuple(), ctx.modulus),
        ) as pool:
            futures = [(uid, pool.submit(_run_unit_in_worker, spec, chunk)) for uid, spec, chunk in pending]
            for uid, fut in futures:
                record(uid, fut.result())
    else:
        for uid, spec, chunk in pending:
            record(uid, scan_unit(ctx, spec, chunk))

    hits = []
    for uid, spec, _chunk in _units(specs, seeds, options.seed_chunk):
        hits.extend((spec, y) for y in done[uid])
    found = _collect(ctx, hits, options.stabilizer_cap)
    report = SearchReport(
        options, specs, classes, raw, len(specs) * len(seeds), found, time.perf_counter() - start
    )
    log.info("search %s: %d G-classes of ovoids", options.params.as_tuple(), len(found))
    return report, ctx


def _collect(ctx: FieldCtx, hits, stabilizer_cap: int) -> list[FoundOvoid]:
    """Verify every hit and keep one G-class representative each."""
    by_set: dict[frozenset, list] = {}
    for spec, y in hits:
        O = orbit(ctx, spec, Point(1, y))
        cert = verify_ovoid(ctx, O, (spec, Point(1, y)))
        if not cert.valid:
            raise AssertionError("kernel survivor failed verification")
        by_set.setdefault(frozenset(O.x_codes.tolist()), []).append((spec, y))
    by_class: dict[tuple, list] = {}
    for members, witnesses in by_set.items():
        O = PointSet.from_x_codes(ctx, sorted(members))
        key = canonical_image(ctx, O)
        by_class.setdefault(key, []).extend(witnesses)
    found = []
    for key in sorted(by_class):
        spec, y = by_class[key][0]
        rep = PointSet.of(ctx, key)
        cert = verify_ovoid(ctx, rep)
        transitive = None
        if group_order(ctx) <= stabilizer_cap:
            stab = stabilizer_elements(ctx, rep, stabilizer_cap)
            cert.stabilizer_order_in_G = len(stab)
            transitive = len({act(ctx, g, rep[0]) for g in stab}) == len(rep)
        classical = is_classical(ctx, rep)
        profile = None
        if ctx.n == 3 and transitive:
            profile = line_profile(ctx, rep)
        found.append(
            FoundOvoid(
                spec, Point(1, y), rep, cert, transitive, len(by_class[key]), classical, profile
            )
        )
    return found


def dedupe_by_G(ctx: FieldCtx, ovoids) -> list[PointSet]:
    """One representative per G-class: its least canonical image, sorted."""
    keys = {canonical_image(ctx, O) for O in ovoids}
    return [PointSet.of(ctx, k) for k in sorted(keys)]


# ---- brute-force completeness oracle -----------------------------------------------------------


def all_subgroups(ctx: FieldCtx, cap: int = 4096) -> list[frozenset]:
    """Every subgroup of G, each generated by two elements (G is metacyclic)."""
    G = group_elements(ctx)
    if len(G) > cap:
        raise BudgetExceeded(f"|G| = {len(G)} too large for subgroup enumeration")
    cyclic: dict[frozenset, tuple] = {}
    for g in G:
        cyclic.setdefault(closure(ctx, [g]), g)
    found = set(cyclic)
    gens = sorted(cyclic.values())
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            found.add(closure(ctx, [gens[a], gens[b]]))
    return sorted(found, key=lambda H: (len(H), sorted(H)))


def brute_force_classes(ctx: FieldCtx) -> list[tuple]:
    """Canonical images of every H-orbit ovoid through any affine singular point."""
    from .geometry import singular_points

    seeds = [P for P in singular_points(ctx) if P.a == 1]
    keys = set()
    for H in all_subgroups(ctx):
        if len(H) % ctx.singer_order:
            continue
        for P in seeds:
            O = PointSet.of(ctx, (act(ctx, g, P) for g in H))
            if len(O) == ctx.singer_order and verify_ovoid(ctx, O).valid:
                keys.add(canonical_image(ctx, O))
    return sorted(keys)
