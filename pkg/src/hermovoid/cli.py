"""Command-line entry point.

Every subcommand prints one key-sorted JSON document on stdout and a short
human summary on stderr.  Exit codes: 0 success, 1 a verification came out
false, 2 usage or malformed input, 3 an enumeration budget was exceeded.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import bounds
from .errors import BudgetExceeded, GeometryError, HermovoidError, VerificationError
from .formats import FormatError, dumps, ovoid_from_json, ovoid_to_json, read_json, write_json
from .geometry import Point, PointSet, classical_ovoid, line_through
from .gf import Params, build_field_ctx
from .group import STABILIZER_CAP, SubgroupSpec
from .ovoid import (
    construct_q8,
    construct_singer_type,
    derive,
    intersection_profile,
    q8_presentation,
    singer_type_presentation,
    verify_ovoid,
)
from .search import PRUNING_LEMMAS, SearchOptions, run_search

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
BUDGET_ENV = "HERMOVOID_ELEMENT_BUDGET"
CONSTRUCTIONS = ("classical", "singer", "q8-1", "q8-2")


class UsageError(HermovoidError):
    pass


def _budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return STABILIZER_CAP
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"{BUDGET_ENV} must be an integer") from exc


def _emit(payload, summary: str) -> None:
    sys.stdout.write(dumps(payload))
    print(summary, file=sys.stderr)


def _params(args) -> Params:
    try:
        return Params(args.p, args.d, args.n)
    except (ValueError, HermovoidError) as exc:
        raise UsageError(str(exc)) from exc


def _load_ovoid(path: str):
    document = read_json(path)
    ctx, points = ovoid_from_json(document)
    return ctx, points, document.get("presentation")


# ---- subcommands ----------------------------------------------------------------------------


def cmd_construct(args) -> int:
    ctx = build_field_ctx(_params(args))
    presentation = None
    if args.kind == "classical":
        O = classical_ovoid(ctx, Point(1, 0))
    elif args.kind == "singer":
        O = construct_singer_type(ctx)
        presentation = singer_type_presentation(ctx)
    else:
        variant = int(args.kind[-1])
        O = construct_q8(ctx, variant)
        presentation = q8_presentation(ctx, variant)
    document = ovoid_to_json(ctx, O)
    if presentation is not None:
        spec, base = presentation
        document["presentation"] = {"spec": spec.to_json(), "base": base.to_json(ctx)}
    cert = verify_ovoid(ctx, O, presentation)
    if args.out:
        write_json(args.out, document)
        payload = {"kind": args.kind, "out": args.out, "certificate": cert.to_json()}
    else:
        payload = document
    _emit(payload, f"{args.kind}: {len(O)} points, valid={cert.valid}")
    return EXIT_OK if cert.valid else EXIT_FALSE


def cmd_verify(args) -> int:
    ctx, O, presentation = _load_ovoid(args.input)
    hint = None
    if args.fast_path and presentation is not None:
        try:
            spec = SubgroupSpec.from_json(ctx.params, presentation["spec"])
            base = Point.from_json(ctx, presentation["base"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad presentation: {exc}") from exc
        hint = (spec, base)
    try:
        cert = verify_ovoid(ctx, O, hint)
    except GeometryError as exc:
        _emit({"valid": False, "reason": str(exc), "size": len(O)}, f"not an ovoid: {exc}")
        return EXIT_FALSE
    summary = f"size {cert.size}, valid={cert.valid}"
    if cert.first_failure is not None:
        summary += f", first perpendicular pair {cert.first_failure}"
    _emit(cert.to_json(), summary)
    return EXIT_OK if cert.valid else EXIT_FALSE


def cmd_profile(args) -> int:
    ctx, O, _ = _load_ovoid(args.input)
    report = intersection_profile(ctx, O, sample=args.sample, seed=args.seed)
    _emit(report.to_json(ctx), f"checked {report.checked} points, histogram {report.histogram}")
    return EXIT_OK if report.ok else EXIT_FALSE


def _parse_line(ctx, O: PointSet, text: str):
    try:
        first, second = (int(part) for part in text.split(","))
        return line_through(ctx, O[first], O[second])
    except (ValueError, IndexError) as exc:
        raise UsageError(f"--line expects two point indices 'I,J' into the ovoid: {exc}") from exc


def cmd_derive(args) -> int:
    ctx, O, _ = _load_ovoid(args.input)
    line = _parse_line(ctx, O, args.line)
    derived = derive(ctx, O, line)
    document = ovoid_to_json(ctx, derived)
    cert = verify_ovoid(ctx, derived)
    if args.out:
        write_json(args.out, document)
        payload = {"out": args.out, "certificate": cert.to_json()}
    else:
        payload = document
    _emit(payload, f"derived ovoid with {len(derived)} points")
    return EXIT_OK


def cmd_search(args) -> int:
    params = _params(args)
    unknown = set(args.no_prune) - set(PRUNING_LEMMAS)
    if unknown:
        raise UsageError(f"unknown pruning lemma(s): {sorted(unknown)}")
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    options = SearchOptions(
        params,
        pruning=frozenset(PRUNING_LEMMAS) - set(args.no_prune),
        include_s1=args.include_s1,
        workers=args.workers,
        checkpoint=args.checkpoint,
        stabilizer_cap=_budget(),
    )
    report, ctx = run_search(options)
    payload = report.to_json(ctx, timing=not args.no_timing)
    if args.out:
        write_json(args.out, payload)
    _emit(
        payload if not args.out else {"out": args.out, "found_count": report.class_count},
        f"{len(report.specs)} subgroup specs x {len(report.seed_classes)} seeds: "
        f"{report.class_count} G-classes of ovoids",
    )
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.action == "table":
        reports = bounds.np_table(args.pmax)
        if args.table:
            print(bounds.render_table(reports))
        else:
            _emit([r.to_json() for r in reports], bounds.render_table(reports))
        return EXIT_OK
    if args.n is None or args.p is None:
        raise UsageError("bounds check needs --n and --p")
    value = bounds.F(args.n, args.p)
    flag = value >= 1
    payload = {"n": args.n, "p": args.p, "F": f"{value.numerator}/{value.denominator}", "at_least_one": flag}
    _emit(payload, f"F({args.n},{args.p}) = {value} ({'>=' if flag else '<'} 1)")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.which == "kloosterman":
        if args.n is None:
            raise UsageError("oracle kloosterman needs --n")
        result = bounds.kloosterman_count_oracle(_params(args))
        _emit(result.to_json(), f"{result.count} trace-one elements")
        return EXIT_OK
    params = Params(args.p, args.d, 3)
    holds = bounds.trace_one_oracle(params)
    _emit({"p": args.p, "d": args.d, "holds": holds}, f"trace-one obstruction holds: {holds}")
    return EXIT_OK if holds else EXIT_FALSE


# ---- parser --------------------------------------------------------------------------------


def _add_field_args(parser, n_default=None, with_n=True):
    parser.add_argument("--p", type=int, required=True, help="characteristic")
    parser.add_argument("--d", type=int, required=True, help="q = p^d")
    if with_n:
        parser.add_argument("--n", type=int, default=n_default, required=n_default is None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hermovoid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a named ovoid")
    p.add_argument("kind", choices=CONSTRUCTIONS)
    _add_field_args(p, n_default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="check an ovoid file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--fast-path", action="store_true", help="use the stored orbit presentation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("profile", help="perp intersection sizes against an ovoid")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--sample", type=int, default=None, help="0 forces an exhaustive scan")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("derive", help="derive an ovoid along a secant line")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--line", required=True, help="two point indices I,J of the ovoid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("search", help="classify orbit ovoids of <rho^s, rho^j phi^k>")
    _add_field_args(p)
    p.add_argument("--no-prune", action="append", default=[], metavar="LEMMA",
                   help=f"disable one of {', '.join(PRUNING_LEMMAS)}")
    p.add_argument("--include-s1", action="store_true", help="also search Singer orbits")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint")
    p.add_argument("--out")
    p.add_argument("--no-timing", action="store_true", help="omit wall time for byte-stable output")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("bounds", help="exact existence bound")
    p.add_argument("action", choices=("table", "check"))
    p.add_argument("--pmax", type=int, default=bounds.TABLE_PRIMES_BELOW)
    p.add_argument("--table", action="store_true", help="print an aligned text table instead of JSON")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle", help="brute-force trace counts")
    p.add_argument("which", choices=("kloosterman", "trace-one"))
    _add_field_args(p, with_n=False)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FALSE
    except (UsageError, FormatError, HermovoidError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
