"""Generators for designs that attain the Phi_SD lower bound, plus the balance verifier.

Every generator certifies its output before returning it: U-type columns,
the per-resolution balance condition on every run pair, and exact equality
G_D == G_D^LB under constant weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .design import Design
from .gf import GaloisField, build_field, field_of_order, is_prime, prime_power
from .metrics import agreement_counts, bounds, distance_matrix
from .patterns import check_gsoa_strength
from .weights import make_weights


class ConstructionError(RuntimeError):
    """A generated or supplied design failed verification."""


@dataclass(frozen=True, eq=False)
class BalanceProfile:
    """Agreement counts sum_k delta_i(z_ak, z_bk) against their balance targets.

    ``counts[i, a, b]`` for resolutions i = 0..p; ``targets[i]`` is
    nm / (s^i (n - 1)) - m / (n - 1).
    """

    counts: np.ndarray
    targets: tuple[Fraction, ...]
    ok: bool
    witness: dict | None = None

    @property
    def unsatisfiable(self) -> list[int]:
        return [i for i, t in enumerate(self.targets) if t.denominator != 1 or t < 0]


def verify_balance(D: Design) -> BalanceProfile:
    """Check the balance condition at every resolution for every pair of runs."""
    n, m, s, p = D.n, D.m, D.s, D.p
    counts = np.stack([agreement_counts(D, i) for i in range(p + 1)])
    if n < 2:
        return BalanceProfile(counts, (), True)
    targets = tuple(Fraction(n * m, s**i * (n - 1)) - Fraction(m, n - 1) for i in range(p + 1))
    iu = np.triu_indices(n, 1)
    for i, t in enumerate(targets):
        pair_counts = counts[i][iu]
        bad = np.flatnonzero(pair_counts != t) if t.denominator == 1 else np.arange(pair_counts.size)
        if bad.size:
            k = int(bad[0])
            a, b = int(iu[0][k]), int(iu[1][k])
            witness = {"a": a, "b": b, "resolution": i, "count": int(pair_counts[k]), "target": str(t)}
            return BalanceProfile(counts, targets, False, witness)
    return BalanceProfile(counts, targets, True)


def _certify(D: Design, what: str) -> Design:
    if not D.is_u_type:
        raise ConstructionError(f"{what}: output is not U-type")
    prof = verify_balance(D)
    if not prof.ok:
        raise ConstructionError(f"{what}: balance condition fails at {prof.witness}")
    w = make_weights("constant", D.p)
    if D.m >= 2:
        attained = bounds(D.n, D.m, D.s, D.p, w, exact=True, design=D).attained_lb
    else:
        # one column: no projection criterion, but equal distances are still checkable
        A0_minus_A1 = sum(Fraction(1, D.s**i) - Fraction(1, D.s ** (2 * i)) for i in range(D.p + 1))
        dbar = Fraction(D.n * D.m, D.n - 1) * A0_minus_A1
        dm = distance_matrix(D, w, exact=True)
        attained = all(dm.exact(a, b) == dbar for a in range(D.n) for b in range(a + 1, D.n))
    if not attained:
        raise ConstructionError(f"{what}: G_D lower bound not attained")
    return D


def _modulus_text(F: GaloisField) -> str:
    return " ".join(str(c) for c in F.modulus)


def mult_table_design(s: int, p: int, q: int | None = None) -> Design:
    """Multiplication table of GF(s^p) without its zero column, collapsed to s^q levels."""
    q = p if q is None else q
    if not is_prime(s):
        raise ValueError(f"s must be prime, got {s}")
    if s**p > 2**12:
        raise ValueError(f"s^p = {s**p} exceeds 4096")
    if not 1 <= q <= p:
        raise ValueError(f"need 1 <= q <= p, got q={q}")
    F = build_field(s, p)
    x = F.mul_table[:, 1:] // s ** (p - q)
    D = Design(x, s, q, provenance=(f"mult-table s={s} p={p} q={q}; modulus {_modulus_text(F)}",))
    return _certify(D, "mult-table")


def half_columns(F: GaloisField) -> list[int]:
    """From each pair {x, -x} of nonzero elements, the smaller label."""
    return sorted({min(y, int(F.neg(y))) for y in range(1, F.q)})


def half_column_design(s: int, p: int) -> Design:
    """Columns of the multiplication table indexed by one element of each pair {x, -x}."""
    if not is_prime(s) or s == 2:
        raise ValueError(f"s must be an odd prime, got {s}")
    if s**p > 2**12:
        raise ValueError(f"s^p = {s**p} exceeds 4096")
    F = build_field(s, p)
    cols = half_columns(F)
    D = Design(F.mul_table[:, cols], s, p,
               provenance=(f"half-columns s={s} p={p} cols={','.join(map(str, cols))}; "
                           f"modulus {_modulus_text(F)}",))
    return _certify(D, "half-columns")


def is_generalized_hadamard(H: np.ndarray, F: GaloisField) -> tuple[bool, tuple[int, int] | None]:
    """Each element of GF(q) appears n/q times in every difference of two distinct columns."""
    n = H.shape[0]
    if H.shape != (n, n) or n % F.q:
        return False, None
    want = n // F.q
    for j in range(n):
        diff = F.sub(H[:, [j]], H[:, j + 1:])
        for off, col in enumerate(diff.T):
            if not np.all(np.bincount(col, minlength=F.q) == want):
                return False, (j, j + 1 + off)
    return True, None


def gh_to_design(H, s: int, p: int, q: int | None = None) -> Design:
    """Design from a generalized Hadamard matrix GH(lambda s^p, s^p) over GF(s^p).

    Entries are labels of GF(s^p) (s a prime power).  A constant column is
    removed; if there is none, the first column is subtracted from every column
    first.  Entries are then collapsed to s^q levels.
    """
    q = p if q is None else q
    H = np.asarray(H, dtype=np.int64)
    prime_power(s)
    F = field_of_order(s**p)
    if H.size and (H.min() < 0 or H.max() >= F.q):
        raise ConstructionError(f"GH entries must be labels of GF({F.q})")
    ok, where = is_generalized_hadamard(H, F)
    if not ok:
        raise ConstructionError(f"not a generalized Hadamard matrix over GF({F.q}); columns {where}")
    const = [j for j in range(H.shape[1]) if np.all(H[:, j] == H[0, j])]
    if const:
        keep = [j for j in range(H.shape[1]) if j != const[0]]
        x = H[:, keep]
    else:
        x = F.sub(H, H[:, [0]])[:, 1:]
    if not 1 <= q <= p:
        raise ValueError(f"need 1 <= q <= p, got q={q}")
    D = Design(x // s ** (p - q), s, q, provenance=(f"gh n={H.shape[0]} s={s} p={p} q={q}",))
    return _certify(D, "gh")


def read_gh(path) -> np.ndarray:
    """GH file: first line ``n q``, then n rows of n labels in Z_q."""
    lines = [ln for ln in open(path).read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty GH file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("GH header must be 'n q'")
    n, q = int(head[0]), int(head[1])
    rows = [[int(t) for t in ln.split()] for ln in lines[1:]]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"GH body must be {n} rows of {n} entries")
    H = np.array(rows, dtype=np.int64)
    if H.min() < 0 or H.max() >= q:
        raise ValueError(f"GH entries must lie in Z_{q}")
    return H


def rao_hamming_design(s: int) -> Design:
    """Balanced GSOA(s^2, s + 1, s^2, 2) from the saturated linear OA(s^2, s + 1, s, 2).

    The OA columns are x and y + a x (a in GF(s)) over all (x, y) in GF(s)^2.
    Design column j takes its leading digit from OA column j and its second
    digit from column j + shift (cyclically); shifts are tried in order and the
    first certified design is returned.
    """
    prime_power(s)
    if s > 16:
        raise ValueError(f"s must be <= 16, got {s}")
    F = field_of_order(s)
    xs, ys = np.divmod(np.arange(s * s), s)
    oa = [xs] + [F.add(ys, F.mul(a, xs)) for a in range(s)]
    k = s + 1
    for shift in range(1, k):
        x = np.stack([s * oa[j] + oa[(j + shift) % k] for j in range(k)], axis=1)
        D = Design(x, s, 2, provenance=(f"rao-hamming s={s} shift={shift}",))
        try:
            _certify(D, "rao-hamming")
        except ConstructionError:
            continue
        if check_gsoa_strength(D, 2)[0]:
            return D
    raise ConstructionError(f"no digit pairing certified for s={s}")


def juxtapose(D1: Design, D2: Design) -> Design:
    """Column concatenation of two balanced designs with the same (n, s, p)."""
    if (D1.n, D1.s, D1.p, D1.levels) != (D2.n, D2.s, D2.p, D2.levels):
        raise ValueError(f"shape mismatch: {D1.shape} vs {D2.shape}")
    for name, D in (("first", D1), ("second", D2)):
        prof = verify_balance(D)
        if not prof.ok:
            raise ConstructionError(f"{name} design fails the balance condition at {prof.witness}")
    D = Design(np.hstack([D1.x, D2.x]), D1.s, D1.p,
               provenance=D1.provenance + D2.provenance + (f"juxtapose m={D1.m}+{D2.m}",))
    prof = verify_balance(D)
    if not prof.ok:
        raise ConstructionError(f"juxtaposed design fails the balance condition at {prof.witness}")
    return D


def collapse_design(D: Design, q: int) -> Design:
    """Truncate every entry to its leading q base-s digits."""
    if not D.native:
        raise ValueError("collapsing needs levels Z_{s^p}")
    if not 1 <= q <= D.p:
        raise ValueError(f"need 1 <= q <= p = {D.p}, got q={q}")
    return Design(D.x // D.s ** (D.p - q), D.s, q, provenance=D.provenance + (f"collapse p={D.p} -> q={q}",))


def worst_case_design(n: int, m: int, s: int, p: int) -> Design:
    """m identical copies of the sorted balanced column; attains the upper bound."""
    if n % s**p:
        raise ValueError(f"need s^p | n, got n={n}, s^p={s**p}")
    col = np.repeat(np.arange(s**p), n // s**p)
    return Design(np.tile(col[:, None], (1, m)), s, p, provenance=(f"worst-case n={n} m={m} s={s} p={p}",))
