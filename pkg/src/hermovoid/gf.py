"""Arithmetic in the tower F_p < F_q < F_{q^2} < F_{q^n} < F_{q^2n}.

Every field of the tower lives inside one ambient field F_{p^N}, N = 2nd,
built from a primitive polynomial f over F_p.  Elements are plain Python
ints: the coefficient vector c_0 + c_1 X + ... + c_{N-1} X^{N-1} read as
base-p digits, c_0 least significant.  That integer is also the "canonical
encoding" used to order points and pick representatives.

Two evaluation strategies sit behind the same interface:

* scalar operations (`mul`, `pow`, `trace`, ...) on single elements, using
  exp/log tables when the field has at most `table_limit` elements and
  table-free polynomial arithmetic otherwise;
* F_p-linear maps as N x N matrices (`mul_matrix`, `frobenius_matrix`,
  `trace_matrix`) applied with numpy to stacks of digit rows.  The search
  and verification kernels are written against these.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from sympy import factorint, isprime
from sympy.ntheory import primitive_root

from .errors import BudgetExceeded, FieldError

TABLE_LIMIT = 1 << 20
MAX_FIELD_ORDER = 1 << 62
ENUMERATION_CAP = 1 << 22


@dataclass(frozen=True)
class Params:
    p: int
    d: int
    n: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and self.p >= 2 and isprime(self.p)):
            raise FieldError(f"p={self.p} is not prime")
        if self.d < 1:
            raise FieldError(f"d={self.d} must be positive")
        if self.n < 3 or self.n % 2 == 0:
            raise FieldError(f"n={self.n} must be odd and at least 3")

    @property
    def q(self) -> int:
        return self.p**self.d

    @property
    def degree(self) -> int:
        """Degree N = 2nd of the ambient field over F_p."""
        return 2 * self.n * self.d

    @property
    def singer_order(self) -> int:
        """q^n + 1, the order of omega and of the cyclic group <rho>."""
        return self.q**self.n + 1

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.n)


# -- polynomials over F_p used while searching for the modulus ---------------


def _poly_mulmod(a, b, f, p):
    N = len(f) - 1
    prod = [0] * (2 * N - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    prod[i + j] += ai * bj
    for t in range(2 * N - 2, N - 1, -1):
        c = prod[t] % p
        if c:
            base = t - N
            for i in range(N):
                if f[i]:
                    prod[base + i] -= c * f[i]
    return [v % p for v in prod[:N]]


def _poly_times_x(a, f, p):
    top = a[-1]
    out = [0] + a[:-1]
    if top:
        out = [(v - top * fi) % p for v, fi in zip(out, f)]
    return out


def _x_power(e, f, p):
    """X**e mod f as a coefficient list (left-to-right binary powering)."""
    N = len(f) - 1
    r = [1] + [0] * (N - 1)
    for bit in bin(e)[2:]:
        r = _poly_mulmod(r, r, f, p)
        if bit == "1":
            r = _poly_times_x(r, f, p)
    return r


def _clmul_mod(a, b, fint, N):
    r = 0
    top = 1 << N
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= fint
    return r


def _x_power_binary(e, fint, N):
    r = 1
    for bit in bin(e)[2:]:
        r = _clmul_mod(r, r, fint, N)
        if bit == "1":
            r <<= 1
            if r >> N:
                r ^= fint
    return r


def _has_prime_field_root(coeffs, p):
    for x in range(p):
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % p
        if acc == 0:
            return True
    return False


def _x_is_primitive(coeffs, p, order, cofactors):
    N = len(coeffs) - 1
    one = [1] + [0] * (N - 1)
    if p == 2:
        fint = sum(c << i for i, c in enumerate(coeffs))
        if _x_power_binary(order, fint, N) != 1:
            return False
        return all(_x_power_binary(c, fint, N) != 1 for c in cofactors)
    if _x_power(order, coeffs, p) != one:
        return False
    return all(_x_power(c, coeffs, p) != one for c in cofactors)


@functools.lru_cache(maxsize=None)
def primitive_modulus(p: int, degree: int) -> tuple[int, ...]:
    """Lexicographically least monic primitive polynomial of `degree` over F_p.

    Polynomials are compared by their ascending coefficient sequence
    (c_0, c_1, ..., c_{N-1}, 1).  The constant term of a primitive polynomial
    is (-1)^N times a primitive root mod p, which filters c_0 up front.
    """
    order = p**degree - 1
    cofactors = [order // r for r in factorint(order)]
    sign = -1 if degree % 2 else 1
    if p == 2:
        constants = [1]
    else:
        g = primitive_root(p)
        roots = {pow(g, k, p) for k in range(1, p) if math.gcd(k, p - 1) == 1}
        constants = sorted(c for c in range(1, p) if (sign * c) % p in roots)
    for c0 in constants:
        for rest in itertools.product(range(p), repeat=degree - 1):
            coeffs = (c0,) + rest + (1,)
            if _has_prime_field_root(coeffs, p):
                continue
            if _x_is_primitive(list(coeffs), p, order, cofactors):
                return coeffs
    raise FieldError(f"no primitive polynomial of degree {degree} over F_{p}")


# -- the ambient field -------------------------------------------------------


class FieldCtx:
    """The ambient field F_{p^N} for one parameter triple (p, d, n).

    Immutable after construction; lazily filled caches only memoise pure
    functions of the construction data.
    """

    def __init__(self, params: Params, modulus=None, table_limit: int = TABLE_LIMIT):
        self.params = params
        p, N = params.p, params.degree
        self.p = p
        self.d = params.d
        self.n = params.n
        self.q = params.q
        self.degree = N
        self.order = p**N
        if self.order > MAX_FIELD_ORDER:
            raise FieldError(f"F_{p}^{N} exceeds the supported field size")
        self.mult_order = self.order - 1
        self.singer_order = params.singer_order
        if modulus is None:
            modulus = primitive_modulus(p, N)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != N + 1 or modulus[-1] != 1:
            raise FieldError("modulus must be monic of degree 2nd")
        self.modulus = modulus
        self._f = list(modulus)
        self._fint = sum(c << i for i, c in enumerate(modulus)) if p == 2 else None
        self._weights = np.array([p**i for i in range(N)], dtype=np.int64)
        self._reduction = self._reduction_matrix()
        self._cache: dict = {}

        self._exp = self._log = None
        if self.order <= table_limit:
            self._build_tables()

        M, Q, q = self.mult_order, self.singer_order, self.q
        self.g = p  # the residue of X
        self.e_omega = M // Q
        self.e_omega0 = M // (Q * (q - 1))
        self.e_qn = M // (q**self.n - 1)  # exponent of a generator of F_{q^n}*
        self.omega = self.exp(self.e_omega)
        self.omega0 = self.exp(self.e_omega0)

    # ---- representation ------------------------------------------------

    def coeffs(self, a: int) -> list[int]:
        out = []
        for _ in range(self.degree):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    def from_coeffs(self, coeffs) -> int:
        coeffs = list(coeffs)
        if len(coeffs) > self.degree or any(not 0 <= c < self.p for c in coeffs):
            raise FieldError("coefficient vector does not describe a field element")
        return sum(c * self.p**i for i, c in enumerate(coeffs))

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise FieldError(f"{a} is not an element of F_{self.p}^{self.degree}")
        return a

    def decode(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        return (codes[..., None] // self._weights) % self.p

    def encode(self, digits) -> np.ndarray:
        return np.asarray(digits, dtype=np.int64) @ self._weights

    def to_json(self) -> dict:
        return {"p": self.p, "d": self.d, "n": self.n, "modulus": list(self.modulus)}

    @classmethod
    def from_json(cls, data: dict) -> "FieldCtx":
        params = Params(int(data["p"]), int(data["d"]), int(data["n"]))
        modulus = tuple(int(c) for c in data["modulus"])
        if modulus != primitive_modulus(params.p, params.degree):
            return cls(params, modulus)
        return build_field_ctx(params)

    # ---- scalar arithmetic ---------------------------------------------

    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        p = self.p
        return self.from_coeffs([(x + y) % p for x, y in zip(self.coeffs(a), self.coeffs(b))])

    def neg(self, a: int) -> int:
        if self.p == 2:
            return a
        p = self.p
        return self.from_coeffs([(-x) % p for x in self.coeffs(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if self._log is not None:
            return int(self._exp[(self._log[a] + self._log[b]) % self.mult_order])
        if self.p == 2:
            return _clmul_mod(a, b, self._fint, self.degree)
        return self.from_coeffs(_poly_mulmod(self.coeffs(a), self.coeffs(b), self._f, self.p))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise FieldError("zero has no inverse")
            return 1 if e == 0 else 0
        e %= self.mult_order
        if self._log is not None:
            return int(self._exp[(int(self._log[a]) * e) % self.mult_order])
        result = 1
        for bit in bin(e)[2:]:
            result = self.mul(result, result)
            if bit == "1":
                result = self.mul(result, a)
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise FieldError("zero has no inverse")
        return self.pow(a, -1)

    def exp(self, k: int) -> int:
        """g**k for the primitive element g = X."""
        if self._exp is not None:
            return int(self._exp[k % self.mult_order])
        return self.pow(self.g, k)

    def frobenius(self, a: int, i: int = 1) -> int:
        """a**(p**i); i is taken mod N, so i = N is the identity."""
        return self.pow(a, self.p ** (i % self.degree))

    def in_subfield(self, a: int, degree: int) -> bool:
        self._check_divides(degree, self.degree)
        return self.frobenius(a, degree) == a

    def trace(self, a: int, dst: int, src: int | None = None) -> int:
        """Relative trace from the degree-`src` subfield to the degree-`dst` one."""
        src = self.degree if src is None else src
        self._check_divides(src, self.degree)
        if src % dst:
            raise FieldError(f"{dst} does not divide {src}")
        if src != self.degree and not self.in_subfield(a, src):
            raise FieldError(f"element is not in the degree-{src} subfield")
        if src == self.degree and self._log is not None:
            if a == 0:
                return 0
            return int(self.trace_table(dst)[self._log[a]])
        total = 0
        for i in range(src // dst):
            total = self.add(total, self.frobenius(a, dst * i))
        return total

    def log(self, a: int) -> int:
        """Discrete logarithm to base g (Pohlig-Hellman without tables)."""
        if a == 0:
            raise FieldError("zero has no logarithm")
        if self._log is not None:
            return int(self._log[a])
        M = self.mult_order
        residues, moduli = [], []
        for r, e in factorint(M).items():
            re = r**e
            h = self.pow(a, M // re)
            base = self.pow(self.g, M // re)
            gamma = self.pow(base, re // r)
            x = 0
            for k in range(e):
                hk = self.pow(self.mul(self.pow(base, -x), h), re // r ** (k + 1))
                x += _bsgs(self, gamma, hk, r) * r**k
            residues.append(x)
            moduli.append(re)
        return _crt(residues, moduli)

    # ---- subfields and special elements --------------------------------

    def subfield_generator(self, degree: int) -> int:
        self._check_divides(degree, self.degree)
        return self.exp(self.mult_order // (self.p**degree - 1))

    def subfield_elements(self, degree: int) -> list[int]:
        """All elements of the degree-`degree` subfield, 0 first."""
        size = self.p**degree
        if size > ENUMERATION_CAP:
            raise BudgetExceeded(f"subfield of size {size} is too large to list")
        step = self.mult_order // (size - 1)
        if self._exp is not None:
            ks = (np.arange(size - 1, dtype=np.int64) * step) % self.mult_order
            return [0] + [int(v) for v in self._exp[ks]]
        gen = self.exp(step)
        out, x = [0], 1
        for _ in range(size - 1):
            out.append(x)
            x = self.mul(x, gen)
        return out

    def embed_root(self, minpoly) -> int:
        """Root of an irreducible F_p-polynomial with least canonical encoding.

        `minpoly` is an ascending coefficient sequence.  All roots are
        Frobenius conjugates, so the choice only fixes a representative.
        """
        coeffs = [int(c) % self.p for c in minpoly]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        deg = len(coeffs) - 1
        if deg < 1 or self.degree % deg:
            raise FieldError(f"polynomial of degree {deg} has no root in F_{self.p}^{self.degree}")
        roots = [x for x in self.subfield_elements(deg) if self._poly_eval(coeffs, x) == 0]
        if not roots:
            raise FieldError("polynomial has no root in the ambient field")
        return min(roots)

    def coset_decompose(self, x: int) -> tuple[int, int, int]:
        """Write x = f * omega**i * omega0**eps with f in F_{q^n}*.

        eps is 0 whenever q is even; i is the least admissible value in
        [0, q^n].
        """
        if x == 0:
            raise FieldError("zero has no coset decomposition")
        M, Q = self.mult_order, self.singer_order
        e = self.log(x)
        step_f = self.e_qn  # F_{q^n}* = multiples of this exponent
        for eps in ((0,) if self.q % 2 == 0 else (0, 1)):
            c = (e - eps * self.e_omega0) % M
            # need i with i * e_omega = c (mod step_f), e_omega = q^n - 1
            g = math.gcd(self.e_omega, step_f)
            if c % g:
                continue
            mod = step_f // g
            i = (c // g) * pow(self.e_omega // g, -1, mod) % mod
            if i > Q - 1:
                continue
            k = ((c - i * self.e_omega) % M) // step_f
            return self.exp(k * step_f), i, eps
        raise FieldError("coset decomposition failed")  # unreachable by the coset lemma

    # ---- F_p-linear maps on digit rows ---------------------------------

    def mul_matrix(self, a: int) -> np.ndarray:
        """Matrix of y -> a*y acting on digit column vectors."""
        col = self.coeffs(a)
        cols = []
        for _ in range(self.degree):
            cols.append(col)
            col = _poly_times_x(col, self._f, self.p)
        return np.array(cols, dtype=np.int64).T

    def frobenius_matrix(self, i: int = 1) -> np.ndarray:
        i %= self.degree
        key = ("frob", i)
        if key not in self._cache:
            if i == 0:
                mat = np.eye(self.degree, dtype=np.int64)
            elif i == 1:
                xp = self.pow(self.g, self.p)
                cols, c = [], 1
                for _ in range(self.degree):
                    cols.append(self.coeffs(c))
                    c = self.mul(c, xp)
                mat = np.array(cols, dtype=np.int64).T
            else:
                mat = matmul_mod(self.frobenius_matrix(1), self.frobenius_matrix(i - 1), self.p)
            self._cache[key] = mat
        return self._cache[key]

    def trace_matrix(self, dst: int, src: int | None = None) -> np.ndarray:
        src = self.degree if src is None else src
        self._check_divides(src, self.degree)
        if src % dst:
            raise FieldError(f"{dst} does not divide {src}")
        key = ("trace", dst, src)
        if key not in self._cache:
            total = np.zeros((self.degree, self.degree), dtype=np.int64)
            for i in range(src // dst):
                total += self.frobenius_matrix(dst * i)
            self._cache[key] = total % self.p
        return self._cache[key]

    def apply(self, matrix: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Apply a linear map to each digit row."""
        return matmul_mod(rows, matrix.T, self.p)

    def mul_rows(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Row-wise products of two stacks of digit rows."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        N = self.degree
        prod = np.zeros(A.shape[:-1] + (2 * N - 1,), dtype=np.int64)
        for i in range(N):
            prod[..., i : i + N] += A[..., i : i + 1] * B
        prod %= self.p
        return (prod[..., :N] + prod[..., N:] @ self._reduction) % self.p

    def iter_powers(self, base: int, count: int, block: int = 4096):
        """Yield digit rows of base**0, ..., base**(count-1) in blocks."""
        if count <= 0:
            return
        N, p = self.degree, self.p
        step = self.mul_matrix(base).T
        first = np.empty((min(block, count), N), dtype=np.int64)
        row = np.zeros(N, dtype=np.int64)
        row[0] = 1
        for r in range(len(first)):
            first[r] = row
            row = (row @ step) % p
        yield first
        done = len(first)
        if done >= count:
            return
        jump = self.mul_matrix(self.pow(base, len(first))).T
        cur = first
        while done < count:
            cur = matmul_mod(cur, jump, p)
            take = min(len(cur), count - done)
            yield cur[:take]
            done += take

    def powers(self, base: int, count: int) -> np.ndarray:
        return np.concatenate(list(self.iter_powers(base, count)), axis=0)

    def trace_table(self, dst: int) -> np.ndarray:
        """Codes of Tr_{F_{p^N}/F_{p^dst}}(g**k) for k in [0, p^N - 1)."""
        if self._exp is None:
            raise BudgetExceeded("trace tables need exp/log tables")
        key = ("trace_table", dst)
        if key not in self._cache:
            tr = self.trace_matrix(dst)
            digits = self.decode(self._exp)
            self._cache[key] = self.encode(self.apply(tr, digits))
        return self._cache[key]

    @property
    def has_tables(self) -> bool:
        return self._log is not None

    @property
    def exp_table(self) -> np.ndarray | None:
        return self._exp

    @property
    def log_table(self) -> np.ndarray | None:
        return self._log

    # ---- internals -----------------------------------------------------

    def _check_divides(self, a: int, b: int):
        if a < 1 or b % a:
            raise FieldError(f"{a} does not divide {b}")

    def _poly_eval(self, coeffs, x: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = self.add(self.mul(acc, x), c)
        return acc

    def _reduction_matrix(self) -> np.ndarray:
        N, p = self.degree, self.p
        rows = []
        col = [(-c) % p for c in self._f[:N]]  # X^N mod f
        for _ in range(N - 1):
            rows.append(col)
            col = _poly_times_x(col, self._f, p)
        return np.array(rows, dtype=np.int64).reshape(N - 1, N)

    def _build_tables(self):
        M = self.mult_order
        exp = np.empty(M, dtype=np.int64)
        pos = 0
        for block in self.iter_powers(self.p, M):
            exp[pos : pos + len(block)] = self.encode(block)
            pos += len(block)
        log = np.full(self.order, -1, dtype=np.int64)
        log[exp] = np.arange(M, dtype=np.int64)
        if (log[1:] < 0).any():
            raise FieldError("modulus is not primitive")
        self._exp, self._log = exp, log


def matmul_mod(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    """(A @ B) mod p, exact for the digit sizes used here.

    The product goes through float64 BLAS; every partial sum is below
    N * (p - 1)**2, far inside the exact-integer range of a double.
    """
    out = np.asarray(A, dtype=np.float64) @ np.asarray(B, dtype=np.float64)
    return np.mod(out, p).astype(np.int64)


def _bsgs(ctx: FieldCtx, gamma: int, h: int, r: int) -> int:
    m = math.isqrt(r) + 1
    table = {}
    x = 1
    for j in range(m):
        table.setdefault(x, j)
        x = ctx.mul(x, gamma)
    giant = ctx.pow(gamma, -m)
    y = h
    for i in range(m + 1):
        if y in table:
            return (i * m + table[y]) % r
        y = ctx.mul(y, giant)
    raise FieldError("discrete logarithm does not exist")


def _crt(residues, moduli) -> int:
    x, mod = 0, 1
    for r, m in zip(residues, moduli):
        t = ((r - x) * pow(mod, -1, m)) % m
        x += mod * t
        mod *= m
    return x % mod


@functools.lru_cache(maxsize=None)
def _cached_ctx(params: Params, table_limit: int) -> FieldCtx:
    return FieldCtx(params, table_limit=table_limit)


def build_field_ctx(params: Params | tuple, table_limit: int = TABLE_LIMIT) -> FieldCtx:
    """Deterministic field context for the given parameters (memoised)."""
    if not isinstance(params, Params):
        params = Params(*params)
    return _cached_ctx(params, table_limit)
