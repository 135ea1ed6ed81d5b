"""Threshold-accepting search for low-Phi_SD U-type designs.

Moves swap two entries inside one column, so columns stay balanced.  For
U-type designs Phi_SD is an increasing affine function of G_D, so the search
works on G_D and updates the distance matrix in O(n) per move.  With rational
weights distances are kept as integer multiples of a common unit, which makes
the incremental updates drift-free.
"""
from __future__ import annotations

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .design import Design
from .gf import nrt_distance
from .metrics import DistanceMatrix, _scaled_weights, bounds, distance_matrix, kernel_constants
from .weights import WeightScheme, nrt_penalty_table

log = logging.getLogger(__name__)

_TABLE_LIMIT = 1024


def random_u_type(n: int, m: int, s: int, p: int, seed=None) -> Design:
    """Each column an independent uniform shuffle of the balanced level vector."""
    if n % s**p:
        raise ValueError(f"need s^p | n, got n={n}, s^p={s**p}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    base = np.repeat(np.arange(s**p), n // s**p)
    x = np.stack([rng.permutation(base) for _ in range(m)], axis=1) if m else np.zeros((n, 0), int)
    return Design(x, s, p)


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 20000
    restarts: int = 5
    seed: int = 0
    initial_fraction: float = 0.05
    decay: float = 0.95
    threads: int = 1
    stop_at_bound: bool = True

    def __post_init__(self):
        if self.iterations < 1 or self.restarts < 1:
            raise ValueError("iterations and restarts must be >= 1")
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if self.initial_fraction < 0:
            raise ValueError("initial_fraction must be >= 0")


@dataclass
class SearchResult:
    design: Design
    phi: float
    phi_lb: float
    G: float
    restart_best: list[float]
    iterations: int
    history: list[list[tuple[int, float]]] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.phi - self.phi_lb


def _penalty_table(w: WeightScheme, s: int, p: int, exact: bool) -> np.ndarray:
    """pen[x, y] = contribution of one coordinate pair (x, y) to d_ab, scaled when exact."""
    lv = np.arange(s**p)
    rho = nrt_distance(lv[:, None], lv[None, :], s, p)
    if exact:
        W, _ = _scaled_weights(w, s)
        pen = [sum(W[p - d + 1:]) for d in range(p + 1)]
        return np.array(pen, dtype=np.int64)[rho]
    return np.array(nrt_penalty_table(w, s))[rho]


class _Walker:
    """Mutable design plus its distance matrix, updated in place by swaps."""

    def __init__(self, D: Design, w: WeightScheme, exact: bool):
        self.s, self.p = D.s, D.p
        self.x = D.x.copy()
        self.exact = exact
        dm = distance_matrix(D, w, exact=exact)
        self.d = dm.scaled.astype(np.int64) if exact else dm.d.copy()
        self.G = int(np.sum(self.d * self.d)) if exact else float(np.sum(self.d * self.d))
        self.table = _penalty_table(w, D.s, D.p, exact) if D.s**D.p <= _TABLE_LIMIT else None
        if self.table is None:
            self.pen = np.array(nrt_penalty_table(w, D.s)) if not exact else np.array(
                [sum(_scaled_weights(w, D.s)[0][D.p - r + 1:]) for r in range(D.p + 1)], dtype=np.int64)

    def _pens(self, level: int, col: np.ndarray) -> np.ndarray:
        if self.table is not None:
            return self.table[level, col]
        return self.pen[nrt_distance(level, col, self.s, self.p)]

    def delta(self, k: int, a: int, b: int):
        col = self.x[:, k]
        xa, xb = col[a], col[b]
        step = self._pens(xb, col) - self._pens(xa, col)
        step[a] = 0
        step[b] = 0
        dG = 4 * (step * (self.d[a] - self.d[b] + step)).sum()
        return (int(dG) if self.exact else float(dG)), step

    def apply(self, k: int, a: int, b: int, step: np.ndarray, dG):
        self.d[a] += step
        self.d[:, a] = self.d[a]
        self.d[b] -= step
        self.d[:, b] = self.d[b]
        self.x[a, k], self.x[b, k] = self.x[b, k], self.x[a, k]
        self.G += dG


def incremental_swap_delta(D: Design, dist: DistanceMatrix, k: int, a: int, b: int, w: WeightScheme):
    """Change in G_D from swapping x_ak and x_bk, from the 2(n - 2) affected distances.

    Exact (a Fraction) when ``dist`` was computed with ``exact=True``.
    """
    if a == b or D.x[a, k] == D.x[b, k]:
        raise ValueError("swap must exchange two different entries")
    exact = dist.scaled is not None
    walker = _Walker.__new__(_Walker)
    walker.s, walker.p, walker.x, walker.exact = D.s, D.p, D.x, exact
    walker.d = dist.scaled.astype(np.int64) if exact else dist.d
    walker.table = _penalty_table(w, D.s, D.p, exact)
    dG, _ = walker.delta(k, a, b)
    return Fraction(dG, dist.unit**2) if exact else dG


def _fits_int64(n: int, m: int, w: WeightScheme, s: int) -> bool:
    W, _ = _scaled_weights(w, s)
    return n * n * (m * sum(W)) ** 2 < 2**62


def _one_restart(D0: Design, w: WeightScheme, cfg: SearchConfig, rng: np.random.Generator,
                 G_lb, G_ub, unit, exact: bool, tag: str):
    n, m = D0.n, D0.m
    walk = _Walker(D0, w, exact)
    scale = unit * unit if exact else 1
    threshold = cfg.initial_fraction * float(G_ub - G_lb) * scale
    lb_scaled = G_lb * scale
    best_G, best_x = walk.G, walk.x.copy()
    history = [(0, best_G)]
    epoch = n * m
    done = 0
    for it in range(1, cfg.iterations + 1):
        done = it
        if cfg.stop_at_bound and (best_G == lb_scaled if exact else best_G <= lb_scaled * (1 + 1e-12)):
            done = it - 1
            break
        k = int(rng.integers(m))
        while True:
            a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
            if walk.x[a, k] != walk.x[b, k]:
                break
        dG, step = walk.delta(k, a, b)
        if dG <= threshold:
            walk.apply(k, a, b, step, dG)
            if walk.G < best_G:
                best_G, best_x = walk.G, walk.x.copy()
                history.append((it, best_G))
        if it % epoch == 0:
            threshold *= cfg.decay
        if it % 5000 == 0:
            print(f"[{tag}] iter {it} best G {float(best_G) / scale:.9g}", file=sys.stderr)
    return best_G, best_x, history, done


def minimize_phi_sd(shape, w: WeightScheme, cfg: SearchConfig = SearchConfig(),
                    initial: Design | None = None) -> SearchResult:
    """Minimise Phi_SD over U-type (n, m, s^p) designs by threshold accepting.

    Accepts a swap when its G_D increase is at most the current threshold,
    which starts at ``initial_fraction * (G_UB - G_LB)`` and shrinks by
    ``decay`` after every n*m proposals.  Restarts use independent streams
    spawned from ``seed``; ties go to the lower restart index.
    """
    n, m, s, p = shape
    exact = _fits_int64(n, m, w, s)
    if not exact:
        log.warning("scaled distances overflow int64; searching in floating point")
    bd = bounds(n, m, s, p, w, exact=exact)
    kc = kernel_constants(w, s, p, m, n, exact=exact)
    unit = _scaled_weights(w, s)[1] if exact else 1
    streams = [np.random.default_rng(ss) for ss in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)]

    def run(r: int):
        rng = streams[r]
        D0 = initial if (initial is not None and r == 0) else random_u_type(n, m, s, p, rng)
        if D0.shape != (n, m, s, p) or not D0.is_u_type:
            raise ValueError("initial design must be U-type with the requested shape")
        return _one_restart(D0, w, cfg, rng, bd.G_LB, bd.G_UB, unit, exact, f"restart {r}")

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outs = list(pool.map(run, range(cfg.restarts)))
    else:
        outs = [run(r) for r in range(cfg.restarts)]

    scale = unit * unit if exact else 1
    best_r = min(range(cfg.restarts), key=lambda r: (outs[r][0], r))
    best_G_scaled, best_x = outs[best_r][0], outs[best_r][1]
    G = Fraction(best_G_scaled, scale) if exact else best_G_scaled
    phi = G / (n * n * m * (m - 1)) + kc.C_SD
    restart_best = [float(Fraction(o[0], scale) / (n * n * m * (m - 1)) + kc.C_SD) if exact
                    else o[0] / (n * n * m * (m - 1)) + kc.C_SD for o in outs]
    history = [[(it, float(Fraction(g, scale)) if exact else g) for it, g in o[2]] for o in outs]
    design = Design(best_x, s, p, provenance=(
        f"search n={n} m={m} s={s} p={p} weights={w.label} seed={cfg.seed} "
        f"iters={cfg.iterations} restarts={cfg.restarts} best_restart={best_r}",))
    return SearchResult(design, float(phi), float(bd.phi_LB), float(G), restart_best,
                        sum(o[3] for o in outs), history)
