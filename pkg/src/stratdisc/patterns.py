"""Character-based stratification diagnostics and counting-based strength checks.

For prime s the characters of Z_{s^p} pair u with x through
<u, x> = sum_i f_{p-i+1}(u) f_i(x), so the finest digit of x meets the
leading digit of u.  The character sums of a design are then a discrete
Fourier transform of its digit histogram over (Z_s)^{mp}; the space-filling
pattern S_j collects |chi_u(D)|^2 by NRT weight rho(u) = j.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product

import numpy as np

from .design import Design
from .gf import digits, is_prime
from .metrics import phi_sd
from .weights import make_weights

PATTERN_BUDGET = 10**7
_SNAP = 1e-6


def _require_prime(D: Design):
    if not is_prime(D.s):
        raise ValueError(f"characters need prime s, got s = {D.s}")
    if not D.native:
        raise ValueError("characters need levels Z_{s^p}")


def character_sum(D: Design, u) -> float:
    """|chi_u(D)|^2 evaluated term by term."""
    _require_prime(D)
    s, p = D.s, D.p
    u = list(u)
    if len(u) != D.m:
        raise ValueError(f"u must have {D.m} entries")
    total = 0j
    xi = np.exp(2j * np.pi / s)
    for row in D.x:
        e = 0
        for uk, xk in zip(u, row):
            fu, fx = digits(int(uk), s, p), digits(int(xk), s, p)
            e += sum(fu[p - i] * fx[i - 1] for i in range(1, p + 1))
        total += xi ** (e % s)
    return abs(total) ** 2


@dataclass(frozen=True)
class PatternSpectrum:
    n: int
    m: int
    s: int
    p: int
    S: tuple[float, ...]

    def enumerator(self, y: float) -> float:
        return float(sum(Sj * y**j for j, Sj in enumerate(self.S)))


def _pattern_array(D: Design) -> np.ndarray:
    n, m, s, p = D.n, D.m, D.s, D.p
    hist = np.zeros((s,) * (m * p))
    digs = [(D.x[:, k] // s ** (p - i)) % s for k in range(m) for i in range(1, p + 1)]
    np.add.at(hist, tuple(digs), 1.0)
    energy = np.abs(np.fft.fftn(hist)) ** 2
    snapped = np.rint(energy)
    energy = np.where(np.abs(energy - snapped) <= _SNAP, snapped, energy)
    # rho of a frequency block = highest (1-based) digit position with nonzero frequency
    idx = np.indices((s,) * p)
    rho_block = np.zeros((s,) * p, dtype=np.int64)
    for i in range(p):
        rho_block = np.where(idx[i] != 0, i + 1, rho_block)
    rho = np.zeros((s,) * (m * p), dtype=np.int64)
    for k in range(m):
        shape = [1] * (m * p)
        shape[k * p:(k + 1) * p] = [s] * p
        rho = rho + rho_block.reshape(shape)
    return np.bincount(rho.ravel(), weights=energy.ravel(), minlength=m * p + 1) / n**2


def space_filling_pattern(D: Design, budget: int = PATTERN_BUDGET) -> PatternSpectrum:
    """S_j(D) = n^-2 sum_{rho(u) = j} |chi_u(D)|^2 for j = 0..mp."""
    _require_prime(D)
    if D.m * D.p > 16 or D.s ** (D.m * D.p) > budget:
        raise ValueError(f"pattern needs {D.s}^{D.m * D.p} characters, over budget")
    return PatternSpectrum(D.n, D.m, D.s, D.p, tuple(float(v) for v in _pattern_array(D)))


@dataclass(frozen=True)
class EnumeratorReport:
    y: float
    E: float | None
    E2: float
    S_bar: tuple[float, ...]

    @property
    def S_bar_123(self) -> tuple[float, float, float]:
        pad = tuple(self.S_bar) + (0.0,) * 4
        return pad[1], pad[2], pad[3]


def pair_pattern(D: Design) -> tuple[float, ...]:
    """Coefficients of E_2(D; y): the space-filling patterns averaged over column pairs."""
    _require_prime(D)
    if D.m < 2:
        raise ValueError("need m >= 2")
    pairs = list(combinations(range(D.m), 2))
    acc = np.zeros(2 * D.p + 1)
    for u in pairs:
        acc += _pattern_array(D.columns(u))
    return tuple(float(v) for v in acc / len(pairs))


def enumerators(D: Design, y: float) -> EnumeratorReport:
    """E(D; y) (when the full character group is small enough) and E_2(D; y)."""
    S_bar = pair_pattern(D)
    E2 = float(sum(c * y**j for j, c in enumerate(S_bar)))
    try:
        E = space_filling_pattern(D).enumerator(y)
    except ValueError:
        E = None
    return EnumeratorReport(y, E, E2, S_bar)


@dataclass(frozen=True)
class Corollary2Check:
    phi_enumerator: float
    phi_kernel: float
    diff: float


def check_corollary2(D: Design, y) -> Corollary2Check:
    """Compare Phi_SD under the enumerator weights with (E_2 - 1) / (1 - y)^2."""
    w = make_weights("enumerator", D.p, s=D.s, y=y)
    yf = float(w.y)
    kernel = phi_sd(D, w).value
    via_e2 = (enumerators(D, yf).E2 - 1) / (1 - yf) ** 2
    return Corollary2Check(via_e2, kernel, abs(via_e2 - kernel))


# -- counting checks ---------------------------------------------------------

def _oa_witness(cols: np.ndarray, radices: list[int], n: int):
    """First level combination whose count differs from n / prod(radices), or None."""
    total = int(np.prod(radices))
    idx = np.zeros(n, dtype=np.int64)
    for c, r in zip(cols.T, radices):
        idx = idx * r + c
    counts = np.bincount(idx, minlength=total)
    want = n / total
    bad = np.flatnonzero(counts != want)
    if bad.size == 0:
        return None
    code = int(bad[0])
    combo = []
    for r in reversed(radices):
        code, v = divmod(code, r)
        combo.append(v)
    return {"levels": combo[::-1], "count": int(counts[bad[0]]), "expected": want}


def _compositions(t: int, g: int, cap: int):
    for parts in product(range(1, cap + 1), repeat=g):
        if sum(parts) == t:
            yield parts


def check_gsoa_strength(D: Design, t: int) -> tuple[bool, dict | None]:
    """True iff every g <= t columns collapse to OA(n, g, s^u1 x ... x s^ug, g) for all
    compositions u1 + ... + ug = t with 1 <= ui <= p.  On failure returns a witness."""
    if not D.native:
        raise ValueError("strength needs levels Z_{s^p}")
    s, p, n = D.s, D.p, D.n
    if t < 1:
        raise ValueError("strength t must be >= 1")
    for g in range(1, min(t, D.m) + 1):
        for parts in _compositions(t, g, p):
            radices = [s**u for u in parts]
            for cols in combinations(range(D.m), g):
                collapsed = np.stack([D.x[:, c] // s ** (p - u) for c, u in zip(cols, parts)], axis=1)
                bad = _oa_witness(collapsed, radices, n)
                if bad is not None:
                    return False, {"columns": list(cols), "composition": list(parts), **bad}
    return True, None


def gsoa_strength(D: Design, t_max: int | None = None) -> int:
    """Largest t for which check_gsoa_strength passes (0 if not even U-type)."""
    t_max = D.m * D.p if t_max is None else t_max
    t = 0
    while t < t_max and check_gsoa_strength(D, t + 1)[0]:
        t += 1
    return t


def check_soa_2plus(D: Design) -> tuple[bool, dict | None]:
    """Every column pair collapses to both OA(n, 2, s^2 x s, 2) and OA(n, 2, s x s^2, 2)."""
    if D.p != 2 or not D.native:
        raise ValueError("strength 2+ is defined for s^2 levels (p = 2)")
    s, n = D.s, D.n
    for j, k in permutations(range(D.m), 2):
        collapsed = np.stack([D.x[:, j], D.x[:, k] // s], axis=1)
        bad = _oa_witness(collapsed, [s * s, s], n)
        if bad is not None:
            return False, {"columns": [j, k], "composition": [2, 1], **bad}
    return True, None
