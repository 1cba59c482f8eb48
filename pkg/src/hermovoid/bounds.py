"""Exact existence bound, primitive parts and brute-force trace oracles."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd

import numpy as np
from sympy import isprime, primerange

from .errors import BudgetExceeded, FieldError
from .gf import FieldCtx, Params, build_field_ctx

ORACLE_LIMIT = 1 << 22
TABLE_PRIMES_BELOW = 45


def F(n: int, p: int) -> Fraction:
    """Exact value of the ovoid existence function; both closed forms must agree."""
    if n < 1 or not isprime(p):
        raise ValueError("need n >= 1 and p prime")
    difference = Fraction(comb(n + p - 1, n) ** 2 - comb(n + p - 2, n) ** 2, p**n)
    compact = Fraction(comb(n + p - 2, n - 1) ** 2 * (n + 2 * p - 2), n * p**n)
    if difference != compact:
        raise AssertionError(f"closed forms disagree at n={n}, p={p}")
    return compact


def monotone_from(p: int) -> int:
    """First n from which F(., p) is known to decrease strictly."""
    return (p + 1) // 2 if p > 3 else p + 1


@dataclass
class BoundReport:
    p: int
    rows: list[tuple[int, Fraction, bool]]
    n_p: int

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "n_p": self.n_p,
            "rows": [
                {"n": n, "F": f"{value.numerator}/{value.denominator}", "at_least_one": flag}
                for n, value, flag in self.rows
            ],
        }


def bound_report(p: int) -> BoundReport:
    """Evaluate odd n until F < 1 inside the monotone range."""
    rows = []
    best = 0
    start = monotone_from(p)
    n = 1
    while True:
        value = F(n, p)
        flag = value >= 1
        rows.append((n, value, flag))
        if flag:
            best = n
        elif n >= start:
            break
        n += 2
    return BoundReport(p, rows, best)


def np_table(pmax: int = TABLE_PRIMES_BELOW) -> list[BoundReport]:
    return [bound_report(p) for p in primerange(2, pmax)]


def render_table(reports: list[BoundReport]) -> str:
    header = ("p", *(str(r.p) for r in reports))
    values = ("n_p", *(str(r.n_p) for r in reports))
    widths = [max(len(a), len(b)) for a, b in zip(header, values)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return line(header) + "\n" + line(values)


def is_decreasing(p: int, n: int) -> bool:
    return F(n + 1, p) < F(n, p)


def fp_poly(n: int, p: int) -> int:
    return n**3 + (2 * p - 3) * n**2 - 3 * (p - 1) * n - 2 * p**2 + 3 * p - 1


def monotonicity_check(p: int) -> dict:
    """The closed-form values of the cubic at the two range endpoints, and their signs."""
    at_top = fp_poly(p + 1, p)
    result = {
        "p": p,
        "at_p_plus_1": at_top,
        "at_p_plus_1_matches": at_top == p * (3 * p * p - p + 2),
        "at_p_plus_1_positive": at_top > 0,
    }
    if p > 3:
        mid = fp_poly((p + 1) // 2, p)
        numerator = (p - 1) * (5 * p * p - 18 * p + 1)
        result.update(
            at_half=mid,
            at_half_matches=8 * mid == numerator,
            at_half_positive=mid > 0,
        )
    return result


def primitive_part(x: int, k: int) -> int:
    """Largest divisor of x^k - 1 coprime to every x^i - 1 with i < k."""
    if x < 2 or k < 2:
        raise ValueError("need x, k >= 2")
    value = x**k - 1
    for i in range(1, k):
        shared = gcd(value, x**i - 1)
        while shared > 1:
            value //= shared
            shared = gcd(value, shared)
    return value


def zsigmondy_exception(x: int, k: int) -> bool:
    if (x, k) == (2, 6):
        return True
    return k == 2 and (x + 1) & x == 0


# ---- trace oracles -------------------------------------------------------------------


def _omega_rows(ctx: FieldCtx) -> np.ndarray:
    if ctx.singer_order > ORACLE_LIMIT:
        raise BudgetExceeded(f"{ctx.singer_order} elements exceed the oracle budget")
    return ctx.powers(ctx.omega, ctx.singer_order)


@dataclass
class KloostermanCount:
    q: int
    n: int
    count: int
    bound_positive: bool
    meets_bound: bool | None

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "bound_positive": self.bound_positive,
            "meets_bound": self.meets_bound,
            "n": self.n,
            "q": self.q,
        }


def _at_least(lhs: Fraction, coefficient: Fraction, q: int) -> bool:
    """Exact test of lhs >= coefficient * sqrt(q) for coefficient >= 0."""
    if lhs < 0:
        return False
    return lhs * lhs >= coefficient * coefficient * q


def _at_most(lhs: Fraction, coefficient: Fraction, q: int) -> bool:
    """Exact test of lhs <= coefficient * sqrt(q) for coefficient >= 0."""
    return lhs <= 0 or lhs * lhs <= coefficient * coefficient * q


def kloosterman_count_oracle(params: Params | tuple) -> KloostermanCount:
    """Count z with z^(q^n + 1) = 1 and full trace to F_{q^2} equal to 1."""
    params = params if isinstance(params, Params) else Params(*params)
    q, n = params.q, params.n
    if q % 2 or n < 5 or n % 2 == 0:
        raise FieldError("the count oracle needs q even and n odd >= 5")
    ctx = build_field_ctx(params)
    rows = _omega_rows(ctx)
    traces = ctx.apply(ctx.trace_matrix(2 * ctx.d), rows)
    one = np.zeros(ctx.degree, dtype=traces.dtype)
    one[0] = 1
    count = int((traces == one).all(axis=1).sum())
    if count < 2:
        raise AssertionError(f"only {count} trace-one elements at q={q}, n={n}")
    # bound = main - coeff * sqrt(q) with q^(n/2 - 2) = q^((n-1)/2 - 2) * sqrt(q)
    main = Fraction(q ** (n - 2)) - Fraction(1, q * q)
    coeff = 2 * (q * q - 1) * Fraction(q) ** ((n - 1) // 2 - 2)
    positive = _at_least(main, coeff, q) and main * main != coeff * coeff * q
    meets = _at_most(main - count, coeff, q) if positive else None
    if positive and not meets:
        raise AssertionError(f"count {count} below the lower bound at q={q}, n={n}")
    return KloostermanCount(q, n, count, positive, meets)


def trace_one_oracle(params: Params | tuple) -> bool:
    """True when no element of <omega> outside F_{q^2} has trace 1 down to F_{q^2}."""
    params = params if isinstance(params, Params) else Params(*params)
    if params.n != 3:
        raise FieldError("the trace-one oracle is for n = 3")
    ctx = build_field_ctx(params)
    rows = _omega_rows(ctx)
    fixed = (ctx.apply(ctx.frobenius_matrix(2 * ctx.d), rows) == rows).all(axis=1)
    traces = ctx.apply(ctx.trace_matrix(2 * ctx.d), rows[~fixed])
    one = np.zeros(ctx.degree, dtype=traces.dtype)
    one[0] = 1
    return not bool((traces == one).all(axis=1).any())
