"""The design matrix and its plain-text file format.

A design file starts with a header ``n m s p``, may carry ``#`` comment lines
(generators write ``# provenance: ...``), then n rows of m integers in
Z_{s^p}.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np


class DesignFileError(ValueError):
    """Malformed design file; the message carries line and column."""


@dataclass(frozen=True, eq=False)
class Design:
    """An n x m integer design read under a base-s, depth-p stratification kernel.

    ``levels`` is the number of symbols entries range over.  It defaults to
    s^p.  A different value (e.g. 19 for a 19-run Latin hypercube analysed
    with s = 2, p = 4) keeps the midpoint embedding z = (2x + 1) / (2 levels)
    and maps points to strata by exact integer floors.
    """

    x: np.ndarray
    s: int
    p: int
    levels: int = 0
    provenance: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=np.int64)
        if x.ndim != 2:
            raise ValueError(f"design must be a 2-d matrix, got shape {x.shape}")
        if self.s < 2 or self.p < 1:
            raise ValueError(f"need s >= 2 and p >= 1, got s={self.s}, p={self.p}")
        levels = self.levels or self.s**self.p
        if x.size and (x.min() < 0 or x.max() >= levels):
            raise ValueError(f"entries must lie in Z_{levels}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "levels", levels)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.n, self.m, self.s, self.p

    @property
    def native(self) -> bool:
        """True when the levels are exactly Z_{s^p}."""
        return self.levels == self.s**self.p

    @cached_property
    def is_u_type(self) -> bool:
        """Every column holds each level of Z_{s^p} exactly n / s^p times."""
        if not self.native or self.n % self.levels:
            return False
        want = self.n // self.levels
        return all(np.all(np.bincount(col, minlength=self.levels) == want) for col in self.x.T)

    def strata(self, i: int) -> np.ndarray:
        """Index of the s^i-subinterval containing each embedded entry.

        floor(s^i (2x + 1) / (2 levels)), which equals x // s^(p-i) when
        levels == s^p.
        """
        if not 0 <= i <= self.p:
            raise ValueError(f"resolution {i} outside 0..{self.p}")
        if self.native:
            return self.x // self.s ** (self.p - i)
        return (self.s**i * (2 * self.x + 1)) // (2 * self.levels)

    def embed(self) -> np.ndarray:
        return (2 * self.x + 1) / (2 * self.levels)

    def columns(self, idx) -> Design:
        return replace(self, x=self.x[:, list(idx)])

    def rows(self, idx) -> Design:
        return replace(self, x=self.x[list(idx), :])

    def with_kernel(self, s: int, p: int | None = None) -> Design:
        """Re-read the same entries under a base-s kernel (p defaults to floor(log_s levels))."""
        if p is None:
            p = 0
            while s ** (p + 1) <= self.levels:
                p += 1
        return Design(self.x, s, p, self.levels, self.provenance)

    def with_provenance(self, *lines: str) -> Design:
        return replace(self, provenance=self.provenance + tuple(lines))

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return (self.s, self.p, self.levels) == (other.s, other.p, other.levels) and np.array_equal(self.x, other.x)

    __hash__ = None


def format_design(d: Design) -> str:
    # a non-native design is written with its own levels as a one-digit base
    s, p = (d.s, d.p) if d.native else (d.levels, 1)
    lines = [f"{d.n} {d.m} {s} {p}"]
    lines += [f"# provenance: {t}" for t in d.provenance]
    lines += [" ".join(str(int(v)) for v in row) for row in d.x]
    return "\n".join(lines) + "\n"


def write_design(d: Design, path) -> None:
    Path(path).write_text(format_design(d))


def parse_design(text: str) -> Design:
    header = None
    prov: list[str] = []
    rows: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("provenance:"):
                prov.append(body.split(":", 1)[1].strip())
            continue
        vals = []
        for tok in re.finditer(r"\S+", raw):
            try:
                vals.append(int(tok.group()))
            except ValueError:
                raise DesignFileError(
                    f"line {lineno}, column {tok.start() + 1}: not an integer: {tok.group()!r}") from None
        if header is None:
            if len(vals) != 4:
                raise DesignFileError(f"line {lineno}, column 1: header must be 'n m s p', got {len(vals)} fields")
            header = vals
            n, m, s, p = header
            if n < 1 or m < 1 or s < 2 or p < 1:
                raise DesignFileError(f"line {lineno}, column 1: invalid header {line!r}")
            continue
        n, m, s, p = header
        if len(vals) != m:
            raise DesignFileError(f"line {lineno}, column 1: expected {m} entries, got {len(vals)}")
        for j, v in enumerate(vals):
            if not 0 <= v < s**p:
                raise DesignFileError(f"line {lineno}, column {j + 1}: entry {v} outside Z_{s**p}")
        rows.append(vals)
    if header is None:
        raise DesignFileError("line 1, column 1: empty design file")
    n, m, s, p = header
    if len(rows) != n:
        raise DesignFileError(f"line {lineno}, column 1: expected {n} rows, got {len(rows)}")
    return Design(np.array(rows, dtype=np.int64), s, p, provenance=tuple(prov))


def read_design(path) -> Design:
    return parse_design(Path(path).read_text())
