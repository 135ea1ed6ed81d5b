"""Resolution weights omega(0..p) and the kernel constants derived from them.

Weights are held as exact fractions (parsed from their decimal spelling) with
a float mirror.  Every constant can be evaluated either in double precision
or exactly with :class:`fractions.Fraction`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational

import numpy as np

TAGS = ("constant", "exponential", "enumerator", "custom")


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, float):
        # 0.3 means 3/10 here, not the nearest binary double
        return Fraction(repr(v))
    return Fraction(str(v).strip())


@dataclass(frozen=True)
class WeightScheme:
    """Nonnegative weights omega(0), ..., omega(p), at least one positive."""

    exact: tuple[Fraction, ...]
    tag: str = "custom"
    y: Fraction | None = None

    def __post_init__(self):
        if len(self.exact) < 1:
            raise ValueError("need at least omega(0)")
        if any(w < 0 for w in self.exact):
            raise ValueError(f"weights must be nonnegative: {self.label}")
        if not any(w > 0 for w in self.exact):
            raise ValueError("at least one weight must be positive")

    @property
    def p(self) -> int:
        return len(self.exact) - 1

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([float(w) for w in self.exact])

    @property
    def label(self) -> str:
        if self.tag == "constant":
            return "constant"
        if self.tag == "exponential":
            return f"exp:{self.y}"
        if self.tag == "enumerator":
            return f"enum:{self.y}"
        return "custom:" + ",".join(str(w) for w in self.exact)

    def resolution_weights(self, s: int, exact: bool = False):
        """omega(i) / s^i for i = 0..p, the per-resolution mismatch penalty."""
        if exact:
            return [w / Fraction(s) ** i for i, w in enumerate(self.exact)]
        return self.values / float(s) ** np.arange(self.p + 1)


def make_weights(tag: str, p: int, s: int | None = None, y=None, values=None) -> WeightScheme:
    """Build a weight scheme.

    ``constant``: omega(i) = 1.  ``exponential``: omega(i) = y^i with y in (0, 1].
    ``enumerator``: omega(i) = (s^2 y)^i for i < p and omega(p) = (s^2 y)^p / (1 - y),
    y in (0, 1); this is the choice that ties the discrepancy to the
    stratification pattern enumerator.  ``custom``: the p + 1 given values.
    """
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    if tag == "constant":
        return WeightScheme(tuple(Fraction(1) for _ in range(p + 1)), "constant")
    if tag in ("exp", "exponential"):
        yy = _frac(y)
        if not 0 < yy <= 1:
            raise ValueError(f"exponential weights need y in (0, 1], got {y}")
        return WeightScheme(tuple(yy**i for i in range(p + 1)), "exponential", yy)
    if tag in ("enum", "enumerator"):
        if s is None:
            raise ValueError("enumerator weights need s")
        yy = _frac(y)
        if not 0 < yy < 1:
            raise ValueError(f"enumerator weights need y in (0, 1), got {y}")
        base = s * s * yy
        w = [base**i for i in range(p)] + [base**p / (1 - yy)]
        return WeightScheme(tuple(w), "enumerator", yy)
    if tag == "custom":
        if values is None or len(values) != p + 1:
            raise ValueError(f"custom weights need exactly p + 1 = {p + 1} values")
        return WeightScheme(tuple(_frac(v) for v in values), "custom")
    raise ValueError(f"unknown weight scheme {tag!r}")


def parse_weights(text: str, s: int, p: int) -> WeightScheme:
    """Parse ``constant | exp:<y> | enum:<y> | custom:<w0,...,wp>``."""
    text = text.strip()
    tag, _, arg = text.partition(":")
    tag = tag.strip().lower()
    try:
        if tag == "constant":
            return make_weights("constant", p)
        if tag in ("exp", "enum"):
            return make_weights(tag, p, s=s, y=arg)
        if tag == "custom":
            return make_weights("custom", p, values=[v for v in arg.split(",") if v.strip()])
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad weights {text!r}: {exc}") from None
    raise ValueError(f"bad weights {text!r}: expected constant, exp:<y>, enum:<y> or custom:<w0,...>")


def geometric_partial_sum(q, p: int):
    """sum_{i=0}^p q^i via (1 - q^(p+1)) / (1 - q); q must differ from 1."""
    if q == 1:
        return p + 1
    return (1 - q ** (p + 1)) / (1 - q)


@dataclass(frozen=True)
class KernelConstants:
    """Scalars shared by the fast formula and the bounds for one (weights, s, p, m, n).

    ``A0_partial[l]`` is sum_{i<=l} omega(i)/s^i, so ``A0_partial[p] == A0``.
    Values are floats, or Fractions when built with ``exact=True``.
    """

    s: int
    p: int
    m: int
    n: int
    A0: float
    A1: float
    B: float
    C: float
    A0_partial: tuple
    C_SD: float
    dbar: float


def kernel_constants(w: WeightScheme, s: int, p: int, m: int, n: int, exact: bool = False) -> KernelConstants:
    if w.p != p:
        raise ValueError(f"weights cover resolutions 0..{w.p} but p = {p}")
    if m < 2:
        raise ValueError(f"need m >= 2 for two-dimensional projections, got m = {m}")
    if n < 2:
        raise ValueError(f"need n >= 2, got n = {n}")
    one = Fraction(1) if exact else 1.0
    om = list(w.exact) if exact else [float(v) for v in w.values]
    sf = one * s
    A0 = sum(om[i] / sf**i for i in range(p + 1))
    A1 = sum(om[i] / sf ** (2 * i) for i in range(p + 1))
    B = sum(om[i] ** 2 / sf ** (3 * i) for i in range(p + 1))
    C = sum(om[i] * om[j] / sf ** (i + 2 * j) for j in range(p + 1) for i in range(j))
    partial, acc = [], 0 * one
    for i in range(p + 1):
        acc += om[i] / sf**i
        partial.append(acc)
    C_SD = (-m * A0**2 / (m - 1) + 2 * m * A0 * A1 / (m - 1) - A1**2
            - B / (m - 1) - 2 * C / (m - 1))
    dbar = n * m * (A0 - A1) / (n - 1)
    return KernelConstants(s, p, m, n, A0, A1, B, C, tuple(partial), C_SD, dbar)


def nrt_partial_sum(d: int, w: WeightScheme, s: int, exact: bool = False):
    """g(d) = sum_{i=0}^{p-d} omega(i)/s^i, the one-coordinate kernel at NRT distance d."""
    p = w.p
    if not 0 <= d <= p:
        raise ValueError(f"NRT distance must lie in 0..{p}, got {d}")
    r = w.resolution_weights(s, exact)
    return sum(r[: p - d + 1]) if exact else float(np.sum(r[: p - d + 1]))


def nrt_kernel_table(w: WeightScheme, s: int, exact: bool = False):
    """[g(0), ..., g(p)] for fast lookup by NRT distance."""
    return [nrt_partial_sum(d, w, s, exact) for d in range(w.p + 1)]


def nrt_penalty_table(w: WeightScheme, s: int, exact: bool = False):
    """[A0 - g(0), ..., A0 - g(p)]: per-coordinate contribution to d_ab by NRT distance."""
    r = w.resolution_weights(s, exact)
    p = w.p
    return [sum(r[p - d + 1:]) if exact else float(np.sum(r[p - d + 1:])) for d in range(p + 1)]
