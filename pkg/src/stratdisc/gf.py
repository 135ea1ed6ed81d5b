"""Finite fields GF(r^e) with integer labels, base-s digits and NRT distance.

Elements of GF(r^e) are polynomials over Z_r of degree < e.  The element
c_1 xi^(e-1) + ... + c_e is labeled by the integer sum_j c_j r^(e-j), so the
base-r digits of a label are its coefficient vector, most significant first.
Multiplication uses log/antilog tables over a primitive element; dense
q x q tables are built on request.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product

import numpy as np

MAX_ORDER = 2**20
MAX_TABLE_ORDER = 2**12


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_power(q: int) -> tuple[int, int]:
    """Return (r, e) with q == r**e and r prime; raise ValueError otherwise."""
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    r = next(f for f in range(2, q + 1) if q % f == 0)
    e, rest = 0, q
    while rest % r == 0:
        rest //= r
        e += 1
    if rest != 1:
        raise ValueError(f"{q} is not a prime power")
    return r, e


# -- polynomials over Z_r, coefficient tuples most-significant first ---------

def _trim(a):
    i = 0
    while i < len(a) - 1 and a[i] == 0:
        i += 1
    return tuple(a[i:])


def poly_mod(a, m, r):
    """Remainder of a modulo the monic polynomial m over Z_r."""
    a = list(_trim(a))
    dm = len(m) - 1
    while len(a) - 1 >= dm and any(a):
        c = a[0]
        if c:
            for j in range(len(m)):
                a[j] = (a[j] - c * m[j]) % r
        a.pop(0)
    return _trim(a) if a else (0,)


def poly_mul(a, b, r):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % r
    return _trim(out)


def is_irreducible(m, r: int) -> bool:
    """Trial division of the monic polynomial m by every monic polynomial of degree <= deg(m)/2."""
    deg = len(m) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    for d in range(1, deg // 2 + 1):
        for tail in product(range(r), repeat=d):
            if poly_mod(m, (1,) + tail, r) == (0,):
                return False
    return True


def smallest_irreducible(r: int, e: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible polynomial of degree e over Z_r."""
    for tail in product(range(r), repeat=e):
        m = (1,) + tail
        if is_irreducible(m, r):
            return m
    raise RuntimeError(f"no irreducible polynomial of degree {e} over Z_{r}")  # pragma: no cover


# -- the field ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaloisField:
    r: int
    e: int
    modulus: tuple[int, ...]
    exp: np.ndarray = field(repr=False)
    log: np.ndarray = field(repr=False)

    @property
    def q(self) -> int:
        return self.r**self.e

    @property
    def order(self) -> int:
        return self.q

    def coeffs(self, y: int) -> tuple[int, ...]:
        return digits(y, self.r, self.e)

    def add(self, a, b):
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.r == 2:
            return a ^ b
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        w = 1
        for _ in range(self.e):
            out += ((a // w % self.r + b // w % self.r) % self.r) * w
            w *= self.r
        return out

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.r == 2:
            return a.copy()
        out = np.zeros_like(a)
        w = 1
        for _ in range(self.e):
            out += ((-(a // w % self.r)) % self.r) * w
            w *= self.r
        return out

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        out[nz] = self.exp[(self.log[a[nz]] + self.log[b[nz]]) % (self.q - 1)]
        return out

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return self.exp[(-self.log[a]) % (self.q - 1)]

    @cached_property
    def add_table(self) -> np.ndarray:
        self._check_table_size()
        y = np.arange(self.q)
        return self.add(y[:, None], y[None, :])

    @cached_property
    def mul_table(self) -> np.ndarray:
        self._check_table_size()
        y = np.arange(self.q)
        return self.mul(y[:, None], y[None, :])

    def _check_table_size(self):
        if self.q > MAX_TABLE_ORDER:
            raise ValueError(f"dense tables limited to order <= {MAX_TABLE_ORDER}, got {self.q}")


def _label_mul(a: int, b: int, modulus, r: int, e: int) -> int:
    prod = poly_mod(poly_mul(digits(a, r, e), digits(b, r, e), r), modulus, r)
    return from_digits((0,) * (e - len(prod)) + prod, r)


@lru_cache(maxsize=None)
def build_field(r: int, e: int) -> GaloisField:
    """GF(r^e) defined by the smallest monic irreducible polynomial of degree e."""
    if not is_prime(r):
        raise ValueError(f"characteristic {r} is not prime")
    if e < 1:
        raise ValueError(f"extension degree must be >= 1, got {e}")
    q = r**e
    if q > MAX_ORDER:
        raise ValueError(f"field order {q} exceeds cap {MAX_ORDER}")
    modulus = smallest_irreducible(r, e)
    if q == 2:
        return GaloisField(r, e, modulus, np.array([1]), np.array([0, 0]))
    for g in range(2, q) if e == 1 else range(r, q):
        exp = np.empty(q - 1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        seen = np.zeros(q, dtype=bool)
        x = 1
        ok = True
        for k in range(q - 1):
            if seen[x]:
                ok = False
                break
            seen[x] = True
            exp[k] = x
            log[x] = k
            x = _label_mul(x, g, modulus, r, e)
        if ok and x == 1:
            return GaloisField(r, e, modulus, exp, log)
    raise RuntimeError("no primitive element found")  # pragma: no cover


def field_of_order(q: int) -> GaloisField:
    r, e = prime_power(q)
    return build_field(r, e)


# -- digits and the NRT distance on Z_{s^p} ---------------------------------

def digits(y: int, s: int, p: int) -> tuple[int, ...]:
    """Base-s digits (f_1, ..., f_p) of y, most significant first."""
    if not 0 <= y < s**p:
        raise ValueError(f"label {y} outside Z_{s**p}")
    out = []
    for _ in range(p):
        y, d = divmod(y, s)
        out.append(d)
    return tuple(reversed(out))


def from_digits(f, s: int) -> int:
    y = 0
    for d in f:
        y = y * s + d
    return y


def collapse_level(y, s: int, p: int, q: int):
    """Keep the leading q of p base-s digits; works elementwise on arrays."""
    if not 1 <= q <= p:
        raise ValueError(f"need 1 <= q <= p, got q={q}, p={p}")
    a = np.asarray(y)
    if np.any((a < 0) | (a >= s**p)):
        raise ValueError(f"labels outside Z_{s**p}")
    out = a // s ** (p - q)
    return int(out) if out.ndim == 0 else out


def nrt_distance(x, y, s: int, p: int):
    """p + 1 minus the index of the first differing digit; 0 when x == y.

    Equivalently the number of resolutions i in 1..p at which the leading i
    digits differ.  Vectorized over numpy arrays.
    """
    a, b = np.asarray(x), np.asarray(y)
    n = s**p
    if np.any((a < 0) | (a >= n) | (b < 0) | (b >= n)):
        raise ValueError(f"labels outside Z_{n}")
    rho = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    w = n
    for _ in range(p):
        w //= s
        rho += (a // w) != (b // w)
    return int(rho) if rho.ndim == 0 else rho
