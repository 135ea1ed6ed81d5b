"""Stratified L2-discrepancy, its two-dimensional projection average and bounds.

Every quantity is built from per-resolution agreement counts: for runs a, b
and resolution i, how many coordinates fall in the same s^i-subinterval.
Counts are integers, so distances can be carried exactly as integer
multiples of a common unit when ``exact=True``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from statistics import median

import numpy as np

from . import gf
from .design import Design
from .weights import WeightScheme, kernel_constants, nrt_penalty_table

REL_TOL = 1e-10
ATTAIN_TOL = 1e-9
CELL_BUDGET = 10**8
_ONEHOT_BUDGET = 3 * 10**7


class NotUTypeError(ValueError):
    """The fast formula only holds for U-type designs."""


def close(a, b, rel: float = REL_TOL, abs_tol: float = 0.0) -> bool:
    """The package-wide comparison: |a - b| <= max(rel * max(1, |a|, |b|), abs_tol)."""
    a, b = float(a), float(b)
    return abs(a - b) <= max(rel * max(1.0, abs(a), abs(b)), abs_tol)


def _check_weights(D: Design, w: WeightScheme):
    if w.p != D.p:
        raise ValueError(f"weights cover resolutions 0..{w.p} but the design has p = {D.p}")


def embed(x, s: int, p: int):
    """Midpoint of the x-th of s^p equal subintervals of [0, 1)."""
    a = np.asarray(x)
    if np.any((a < 0) | (a >= s**p)):
        raise ValueError(f"labels outside Z_{s**p}")
    z = (2 * a + 1) / (2 * s**p)
    return float(z) if z.ndim == 0 else z


def delta_i(x, y, i: int, s: int, p: int):
    """1 when x and y share their leading i base-s digits (same s^i-subinterval)."""
    if not 0 <= i <= p:
        raise ValueError(f"resolution {i} outside 0..{p}")
    a, b = np.asarray(x), np.asarray(y)
    if np.any((a < 0) | (a >= s**p) | (b < 0) | (b >= s**p)):
        raise ValueError(f"labels outside Z_{s**p}")
    w = s ** (p - i)
    out = (a // w == b // w).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def agreement_counts(D: Design, i: int) -> np.ndarray:
    """n x n matrix of sum_k delta_i(z_ak, z_bk)."""
    n, m = D.n, D.m
    if i == 0:
        return np.full((n, n), m, dtype=np.int64)
    L = D.strata(i)
    cells = D.s**i
    if n * m * cells <= _ONEHOT_BUDGET:
        onehot = np.zeros((n, m * cells), dtype=np.float32)
        onehot[np.arange(n)[:, None], np.arange(m) * cells + L] = 1.0
        return np.rint(onehot @ onehot.T).astype(np.int64)
    out = np.zeros((n, n), dtype=np.int64)
    for col in L.T:
        out += col[:, None] == col[None, :]
    return out


def _scaled_weights(w: WeightScheme, s: int) -> tuple[list[int], int]:
    """Integers W_i and a unit U with omega(i)/s^i = W_i / U."""
    r = w.resolution_weights(s, exact=True)
    unit = 1
    for f in r:
        unit = unit * f.denominator // math.gcd(unit, f.denominator)
    return [int(f * unit) for f in r], unit


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Weighted hierarchical distances d_ab and G_D = sum over ordered pairs of d_ab^2.

    In exact mode ``scaled`` holds integers with d_ab = scaled[a, b] / unit.
    """

    d: np.ndarray
    G: float
    scaled: np.ndarray | None = None
    unit: int | None = None
    G_exact: Fraction | None = None

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def exact(self, a: int, b: int) -> Fraction:
        if self.scaled is None:
            raise ValueError("distance matrix was computed without exact=True")
        return Fraction(int(self.scaled[a, b]), self.unit)


def distance_matrix(D: Design, w: WeightScheme, exact: bool = False) -> DistanceMatrix:
    """d_ab = sum_k sum_i omega(i)/s^i (1 - delta_i(z_ak, z_bk)) for all run pairs."""
    _check_weights(D, w)
    m = D.m
    if exact:
        W, unit = _scaled_weights(w, D.s)
        big = D.n * D.n * (m * sum(W)) ** 2 >= 2**62
        scaled = np.zeros((D.n, D.n), dtype=object if big else np.int64)
        for i in range(1, D.p + 1):
            if W[i]:
                scaled += W[i] * (m - agreement_counts(D, i))
        G_scaled = int(np.sum(scaled * scaled))
        G_exact = Fraction(G_scaled, unit * unit)
        d = (scaled / unit).astype(float)
        return DistanceMatrix(d, float(G_exact), scaled, unit, G_exact)
    r = w.resolution_weights(D.s)
    d = np.zeros((D.n, D.n))
    for i in range(1, D.p + 1):
        if r[i]:
            d += r[i] * (m - agreement_counts(D, i))
    return DistanceMatrix(d, float(np.sum(d * d)))


def phi_sd_fast(D: Design, w: WeightScheme, exact: bool = False):
    """Phi_SD = G_D / (n^2 m (m - 1)) + C_SD, valid for U-type designs only."""
    if not D.is_u_type:
        raise NotUTypeError("design is not U-type; use phi_sd_oracle")
    n, m = D.n, D.m
    kc = kernel_constants(w, D.s, D.p, m, n, exact)
    dm = distance_matrix(D, w, exact)
    G = dm.G_exact if exact else dm.G
    return G / (n * n * m * (m - 1)) + kc.C_SD


def _column_kernels(D: Design, w: WeightScheme, exact: bool):
    """Yield per-column n x n matrices f(z_ak, z_bk) = sum_i omega(i)/s^i delta_i."""
    if exact:
        W, unit = _scaled_weights(w, D.s)
        cum = np.array(np.cumsum(W), dtype=object)
    else:
        cum = np.cumsum(w.resolution_weights(D.s))
    strata = [D.strata(i) for i in range(1, D.p + 1)]
    for k in range(D.m):
        agree = np.zeros((D.n, D.n), dtype=np.int64)
        for L in strata:
            col = L[:, k]
            agree += col[:, None] == col[None, :]
        # agreement is nested across resolutions, so the count indexes the partial sum
        yield cum[agree]


def sd2(D: Design, w: WeightScheme, exact: bool = False):
    """Squared stratified L2-discrepancy via the kernel closed form (any design)."""
    _check_weights(D, w)
    n, m = D.n, D.m
    if exact:
        W, unit = _scaled_weights(w, D.s)
        A1 = sum(wi / Fraction(D.s) ** (2 * i) for i, wi in enumerate(w.exact))
        prod = np.ones((n, n), dtype=object)
        for K in _column_kernels(D, w, True):
            prod = prod * K
        total = int(np.sum(prod))
        return -(A1**m) + Fraction(total, n * n * unit**m)
    A1 = float(np.sum(w.values / float(D.s) ** (2 * np.arange(D.p + 1))))
    prod = np.ones((n, n))
    for K in _column_kernels(D, w, False):
        prod *= K
    return -(A1**m) + float(np.sum(prod)) / (n * n)


def sd2_cell_oracle(D: Design, w: WeightScheme, budget: int = CELL_BUDGET) -> float:
    """Squared stratified L2-discrepancy straight from its definition.

    For every stratification vector u with omega(u) > 0 the points (taken at
    their embedded midpoints) are counted in each of the s^{|u|} grid cells
    and Vol(c) (Vol(c) - n_c / n)^2 is summed over all cells.
    """
    _check_weights(D, w)
    n, m, s, p = D.n, D.m, D.s, D.p
    total_cells = sum(s**i for i in range(p + 1)) ** m
    if total_cells > budget:
        raise ValueError(f"cell enumeration needs {total_cells} cells, budget is {budget}")
    z = D.embed()
    cell_of = [np.floor(z * s**i).astype(np.int64) for i in range(p + 1)]
    om = w.values
    out = 0.0
    for u in product(range(p + 1), repeat=m):
        wu = float(np.prod(om[list(u)]))
        if wu == 0.0:
            continue
        idx = np.zeros(n, dtype=np.int64)
        for k, uk in enumerate(u):
            idx = idx * s**uk + cell_of[uk][:, k]
        ncells = s ** sum(u)
        counts = np.bincount(idx, minlength=ncells)
        vol = 1.0 / ncells
        out += wu * float(np.sum(vol * (vol - counts / n) ** 2))
    return out


def phi_sd_oracle(D: Design, w: WeightScheme, exact: bool = False):
    """Average of SD^2 over all two-column projections."""
    if D.m < 2:
        raise ValueError("need m >= 2")
    vals = [sd2(D.columns(u), w, exact) for u in combinations(range(D.m), 2)]
    return sum(vals) / len(vals) if exact else float(np.mean(vals))


@dataclass(frozen=True)
class PhiResult:
    value: float
    path: str


def phi_sd(D: Design, w: WeightScheme, exact: bool = False) -> PhiResult:
    """Phi_SD, through the pairwise-distance formula when the design is U-type."""
    if D.is_u_type:
        return PhiResult(phi_sd_fast(D, w, exact), "fast")
    return PhiResult(phi_sd_oracle(D, w, exact), "oracle")


def phi_sd3(D: Design, w: WeightScheme, exact: bool = False):
    """Average of SD^2 over all three-column projections."""
    if D.m < 3:
        raise ValueError("need m >= 3")
    vals = [sd2(D.columns(u), w, exact) for u in combinations(range(D.m), 3)]
    return sum(vals) / len(vals) if exact else float(np.mean(vals))


@dataclass(frozen=True)
class BoundsReport:
    G_LB: float
    G_UB: float
    phi_LB: float
    phi_UB: float
    dbar: float
    attained_lb: bool | None = None
    attained_ub: bool | None = None


def bounds(n: int, m: int, s: int, p: int, w: WeightScheme, exact: bool = False,
           design: Design | None = None) -> BoundsReport:
    """Lower and upper bounds on G_D and Phi_SD over U-type (n, m, s^p) designs.

    With ``design`` the attainment flags are filled in: the lower bound is
    attained iff every off-diagonal d_ab equals dbar, the upper bound iff
    G_D equals G_UB.
    """
    if n < 2 or m < 2:
        raise ValueError(f"need n >= 2 and m >= 2, got n={n}, m={m}")
    if n % s**p:
        raise ValueError(f"U-type (n, m, s^p) designs need s^p | n, got n={n}, s^p={s**p}")
    kc = kernel_constants(w, s, p, m, n, exact)
    A0, A1, B, C, part = kc.A0, kc.A1, kc.B, kc.C, kc.A0_partial
    one = Fraction(1) if exact else 1.0
    lay = [(s - 1) * one / s ** (l + 1) for l in range(p)]
    G_LB = n**3 * m**2 * (A0 - A1) ** 2 / (n - 1)
    G_UB = n * n * m * m * sum(lay[l] * (A0 - part[l]) ** 2 for l in range(p))
    den = (n - 1) * (m - 1)
    phi_LB = (m * A0**2 / den - 2 * m * A0 * A1 / den + (n + m - 1) * A1**2 / den
              - B / (m - 1) - 2 * C / (m - 1))
    phi_UB = (m * A0**2 / ((m - 1) * one * s**p) - A1**2
              + m * sum(lay[l] * part[l] ** 2 for l in range(p)) / (m - 1)
              - B / (m - 1) - 2 * C / (m - 1))
    att_lb = att_ub = None
    if design is not None:
        if design.shape != (n, m, s, p):
            raise ValueError(f"design shape {design.shape} does not match {(n, m, s, p)}")
        dm = distance_matrix(design, w, exact)
        off = ~np.eye(n, dtype=bool)
        if exact:
            target = kc.dbar * dm.unit
            att_lb = target.denominator == 1 and bool(np.all(dm.scaled[off] == int(target)))
            att_ub = dm.G_exact == G_UB
        else:
            att_lb = bool(np.max(np.abs(dm.d[off] - kc.dbar)) <= ATTAIN_TOL)
            att_ub = close(dm.G, G_UB, rel=ATTAIN_TOL)
    return BoundsReport(G_LB, G_UB, phi_LB, phi_UB, kc.dbar, att_lb, att_ub)


def dab_nrt(D: Design, w: WeightScheme, a: int, b: int, exact: bool = False):
    """d_ab as sum_k (A0 - g(rho(x_ak, x_bk))), g the partial-sum kernel."""
    _check_weights(D, w)
    if not D.native:
        raise ValueError("NRT representation needs levels Z_{s^p}")
    if not (0 <= a < D.n and 0 <= b < D.n):
        raise IndexError(f"run index out of range 0..{D.n - 1}")
    pen = nrt_penalty_table(w, D.s, exact)
    rho = gf.nrt_distance(D.x[a], D.x[b], D.s, D.p)
    return sum((pen[r] for r in rho), Fraction(0) if exact else 0.0)


@dataclass(frozen=True)
class DistanceDistribution:
    values: list[tuple[float, int]]
    minimum: float
    median: float
    mean: float
    maximum: float

    @property
    def count(self) -> int:
        return sum(c for _, c in self.values)


def _pair_distances(D: Design, w: WeightScheme):
    """Off-diagonal (a, b, d_ab) for a < b, exact Fractions when available."""
    dm = distance_matrix(D, w, exact=True)
    a, b = np.triu_indices(D.n, 1)
    return a, b, dm


def distance_distribution(D: Design, w: WeightScheme) -> DistanceDistribution:
    """Multiset of the n(n-1)/2 pairwise distances with summary statistics."""
    a, b, dm = _pair_distances(D, w)
    tally = Counter(int(v) for v in dm.scaled[a, b])
    values = [(float(Fraction(v, dm.unit)), c) for v, c in sorted(tally.items())]
    d = dm.d[a, b]
    if d.size == 0:
        return DistanceDistribution([], float("nan"), float("nan"), float("nan"), float("nan"))
    return DistanceDistribution(values, float(d.min()), float(median(d.tolist())), float(d.mean()), float(d.max()))


def write_distances_csv(D: Design, w: WeightScheme, out) -> None:
    """CSV ``a,b,d`` with 1-based run indices, one row per unordered pair."""
    a, b, dm = _pair_distances(D, w)
    out.write("a,b,d\n")
    for i, j in zip(a.tolist(), b.tolist()):
        out.write(f"{i + 1},{j + 1},{dm.d[i, j]:.17g}\n")
