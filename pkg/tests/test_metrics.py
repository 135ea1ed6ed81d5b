import io
from fractions import Fraction
from itertools import combinations_with_replacement, product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import designs_with_weights, random_u_type
from stratdisc import Design, make_weights
from stratdisc.construct import worst_case_design
from stratdisc.metrics import (NotUTypeError, bounds, dab_nrt, delta_i, distance_distribution,
                               distance_matrix, embed, phi_sd, phi_sd3, phi_sd_fast, phi_sd_oracle, sd2,
                               sd2_cell_oracle, write_distances_csv)
from stratdisc.weights import geometric_partial_sum, kernel_constants


def definition_distances(D, w):
    """d_ab from embedded midpoints and floating floors, one coordinate at a time."""
    z = D.embed()
    r = [float(v) for v in w.resolution_weights(D.s)]
    n = D.n
    d = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            for k in range(D.m):
                for i in range(D.p + 1):
                    same = np.floor(D.s**i * z[a, k]) == np.floor(D.s**i * z[b, k])
                    d[a, b] += r[i] * (1 - same)
    return d


def tree_automorphism(rng, s, p):
    """Random level map that permutes child digits independently under every node."""
    perms = {}
    out = np.zeros(s**p, dtype=np.int64)
    for x in range(s**p):
        ds = [(x // s ** (p - 1 - j)) % s for j in range(p)]
        new = []
        for j in range(p):
            key = tuple(ds[:j])
            if key not in perms:
                perms[key] = rng.permutation(s)
            new.append(int(perms[key][ds[j]]))
        out[x] = sum(v * s ** (p - 1 - j) for j, v in enumerate(new))
    return out


# -- elementwise helpers --------------------------------------------------------

def test_embed_examples():
    assert embed(0, 2, 1) == 0.25
    assert embed(8, 3, 2) == 1 - 1 / 18
    assert embed(4, 3, 2) == 0.5


def test_delta_examples():
    assert delta_i(0, 8, 0, 3, 2) == 1
    assert delta_i(3, 5, 1, 3, 2) == 1
    assert delta_i(3, 5, 2, 3, 2) == 0
    with pytest.raises(ValueError):
        delta_i(0, 1, 3, 3, 2)


# -- distances ------------------------------------------------------------------

@given(designs_with_weights())
def test_distances_match_definition(Dw):
    D, w = Dw
    assert np.allclose(distance_matrix(D, w).d, definition_distances(D, w), rtol=1e-12, atol=1e-12)


def test_distance_edge_cases():
    w = make_weights("exponential", 2, y=0.5)
    D = Design([[0, 4], [0, 4], [8, 0]], 3, 2)
    dm = distance_matrix(D, w, exact=True)
    assert dm.exact(0, 1) == 0
    # rows 0 and 2 differ in the leading digit of both coordinates
    assert dm.exact(0, 2) == 2 * (Fraction(1, 2) / 3 + Fraction(1, 4) / 9)


def test_table1_row1_distances(gsoa_9_8, constant):
    dm = distance_matrix(gsoa_9_8, constant, exact=True)
    off = ~np.eye(9, dtype=bool)
    assert all(Fraction(int(v), dm.unit) == Fraction(26, 9) for v in dm.scaled[off])
    assert dm.G_exact == Fraction(5408, 9)
    assert dm.G == pytest.approx(600.888889, abs=5e-7)


@given(designs_with_weights())
def test_triangle_inequality(Dw):
    D, w = Dw
    d = distance_matrix(D, w).d
    for c in range(D.n):
        assert np.all(d <= d[:, [c]] + d[[c], :] + 1e-12)


@given(designs_with_weights())
def test_row_sum_identity(Dw):
    D, w = Dw
    dm = distance_matrix(D, w, exact=True)
    kc = kernel_constants(w, D.s, D.p, D.m, D.n, exact=True)
    target = D.n * D.m * (kc.A0 - kc.A1) * dm.unit
    assert target.denominator == 1
    assert np.all(dm.scaled.sum(axis=1) == int(target))


@given(designs_with_weights(), st.integers(0, 2**32 - 1))
def test_hierarchy_automorphism_invariance(Dw, seed):
    D, w = Dw
    rng = np.random.default_rng(seed)
    cols = [tree_automorphism(rng, D.s, D.p)[D.x[:, k]] for k in range(D.m)]
    E = Design(np.stack(cols, axis=1), D.s, D.p)
    assert np.array_equal(distance_matrix(D, w, exact=True).scaled, distance_matrix(E, w, exact=True).scaled)


@given(designs_with_weights(), st.integers(0, 2**32 - 1))
def test_row_and_column_permutation_invariance(Dw, seed):
    D, w = Dw
    rng = np.random.default_rng(seed)
    E = D.rows(rng.permutation(D.n)).columns(rng.permutation(D.m))
    assert phi_sd_fast(D, w, exact=True) == phi_sd_fast(E, w, exact=True)
    assert sd2(D, w, exact=True) == sd2(E, w, exact=True)
    if D.m >= 3 and D.m <= 4:
        assert phi_sd3(D, w, exact=True) == phi_sd3(E, w, exact=True)


# -- Phi_SD ---------------------------------------------------------------------

def test_table1_phi_exact(gsoa_9_8, gsoa_9_4, constant):
    assert phi_sd_fast(gsoa_9_8, constant, exact=True) == Fraction(470, 45927)
    assert phi_sd_fast(gsoa_9_4, constant, exact=True) == Fraction(44, 6561)
    assert phi_sd_fast(gsoa_9_8, constant) == pytest.approx(0.010234, abs=5e-7)
    assert phi_sd_fast(gsoa_9_4, constant) == pytest.approx(0.006706, abs=5e-7)
    assert phi_sd_oracle(gsoa_9_8, constant) == pytest.approx(0.010234, abs=5e-7)


@given(designs_with_weights(m_range=(2, 6)))
def test_fast_formula_matches_projection_average(Dw):
    D, w = Dw
    fast, oracle = phi_sd_fast(D, w), phi_sd_oracle(D, w)
    assert abs(fast - oracle) <= 1e-10 * max(1.0, abs(fast))


def test_fast_formula_matches_projection_average_exactly():
    rng = np.random.default_rng(5)
    for s, p in [(2, 2), (3, 1), (3, 2)]:
        D = random_u_type(rng, 2 * s**p, 4, s, p)
        w = make_weights("enumerator", p, s=s, y=0.3)
        assert phi_sd_fast(D, w, exact=True) == phi_sd_oracle(D, w, exact=True)


def test_routing_and_non_u_type_rejection():
    w = make_weights("constant", 1)
    D = Design([[0, 1], [0, 0], [1, 1], [0, 1]], 2, 1)
    with pytest.raises(NotUTypeError):
        phi_sd_fast(D, w)
    res = phi_sd(D, w)
    assert res.path == "oracle" and res.value == pytest.approx(phi_sd_oracle(D, w))
    U = Design([[0, 1], [1, 0], [1, 1], [0, 0]], 2, 1)
    assert phi_sd(U, w).path == "fast"


def test_oracle_with_two_columns_is_sd2():
    D = random_u_type(np.random.default_rng(1), 8, 2, 2, 2)
    w = make_weights("exponential", 2, y=0.5)
    assert phi_sd_oracle(D, w, exact=True) == sd2(D, w, exact=True)


# -- SD^2 -----------------------------------------------------------------------

def test_table1_sd2(gsoa_9_8, gsoa_9_4, constant):
    # frozen from the cell-counting oracle
    assert sd2(gsoa_9_8, constant) == pytest.approx(1.148027917759629, rel=1e-12)
    assert sd2(gsoa_9_4, constant) == pytest.approx(0.0758325819985215, rel=1e-12)
    assert sd2(gsoa_9_4, constant) == pytest.approx(0.075833, abs=5e-7)
    assert sd2_cell_oracle(gsoa_9_4, constant) == pytest.approx(sd2(gsoa_9_4, constant), rel=1e-10)


def test_sd2_single_point():
    w = make_weights("exponential", 2, y=0.5)
    kc = kernel_constants(w, 3, 2, 2, 2, exact=True)
    for m in (1, 2, 3):
        D = Design([[4] * m], 3, 2)
        assert sd2(D, w, exact=True) == kc.A0**m - kc.A1**m
        assert sd2_cell_oracle(D, w) == pytest.approx(float(kc.A0**m - kc.A1**m), rel=1e-12)


def test_sd2_exhaustive_binary_two_column():
    # every multiset of rows from {0,1}^2 with up to 8 runs (sd2 ignores row order)
    w = make_weights("constant", 1)
    rows = list(product(range(2), repeat=2))
    count = 0
    for n in range(1, 9):
        for pick in combinations_with_replacement(rows, n):
            D = Design(np.array(pick), 2, 1)
            assert abs(sd2(D, w) - sd2_cell_oracle(D, w)) <= 1e-10
            count += 1
    assert count == 494


def test_sd2_full_factorial_single_column():
    for s, p in [(2, 3), (3, 2)]:
        D = Design(np.arange(s**p)[:, None], s, p)
        w = make_weights("constant", p)
        assert sd2(D, w, exact=True) == 0
        assert abs(sd2_cell_oracle(D, w)) < 1e-14


@given(st.sampled_from([(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)]), st.integers(1, 3),
       st.integers(1, 18), st.integers(0, 2**32 - 1))
def test_sd2_matches_cell_oracle_on_arbitrary_designs(sp, m, n, seed):
    s, p = sp
    rng = np.random.default_rng(seed)
    D = Design(rng.integers(0, s**p, (n, m)), s, p)
    w = make_weights("enumerator", p, s=s, y=0.3)
    assert abs(sd2(D, w) - sd2_cell_oracle(D, w)) <= 1e-10 * max(1.0, abs(sd2(D, w)))


def test_cell_oracle_budget_guard():
    D = Design(np.zeros((2, 6), dtype=int), 2, 6)
    with pytest.raises(ValueError):
        sd2_cell_oracle(D, make_weights("constant", 6), budget=10**6)


# -- three-column criterion ------------------------------------------------------

def test_phi3_reduces_to_sd2_for_three_columns():
    D = random_u_type(np.random.default_rng(3), 9, 3, 3, 2)
    w = make_weights("constant", 2)
    assert phi_sd3(D, w, exact=True) == sd2(D, w, exact=True)


def test_phi3_half_column_design(gsoa_9_4, constant):
    # frozen from averaging sd2_cell_oracle over the four column triples
    assert phi_sd3(gsoa_9_4, constant, exact=True) == Fraction(14876, 531441)
    assert phi_sd3(gsoa_9_4, constant) == pytest.approx(0.027991818470912096, rel=1e-12)


# -- bounds ---------------------------------------------------------------------

@pytest.mark.parametrize("m,phi_lb,G_lb,G_ub", [(8, 0.010234, 600.888889, 696.888889),
                                                (4, 0.006706, 150.222222, 174.222222)])
def test_table1_bounds(m, phi_lb, G_lb, G_ub, constant):
    bd = bounds(9, m, 3, 2, constant)
    assert bd.phi_LB == pytest.approx(phi_lb, abs=5e-7)
    assert bd.phi_UB == pytest.approx(0.031398, abs=5e-7)
    assert bd.G_LB == pytest.approx(G_lb, abs=5e-7)
    assert bd.G_UB == pytest.approx(G_ub, abs=5e-7)


def test_table1_bounds_rational(constant):
    assert bounds(9, 8, 3, 2, constant, exact=True).G_UB == Fraction(6272, 9)
    assert bounds(9, 4, 3, 2, constant, exact=True).G_UB == Fraction(1568, 9)
    assert bounds(9, 4, 3, 2, constant, exact=True).G_LB == Fraction(1352, 9)


def test_phi_bounds_consistent_with_G_bounds():
    rng = np.random.default_rng(11)
    for _ in range(30):
        s, p = [(2, 2), (3, 2), (2, 3)][rng.integers(3)]
        n, m = s**p * int(rng.integers(1, 4)), int(rng.integers(2, 7))
        if n < 2:
            continue
        w = make_weights("exponential", p, y=float(rng.uniform(0.1, 1)))
        kc = kernel_constants(w, s, p, m, n, exact=True)
        bd = bounds(n, m, s, p, w, exact=True)
        assert bd.phi_LB == bd.G_LB / (n * n * m * (m - 1)) + kc.C_SD
        assert bd.phi_UB == bd.G_UB / (n * n * m * (m - 1)) + kc.C_SD


def test_exponential_bounds_closed_forms():
    rng = np.random.default_rng(7)
    S = geometric_partial_sum
    for _ in range(200):
        y, s, p = float(rng.uniform(0.05, 1)), int(rng.integers(2, 6)), int(rng.integers(1, 5))
        n, m = s**p * int(rng.integers(1, 3)), int(rng.integers(2, 9))
        bd = bounds(n, m, s, p, make_weights("exponential", p, y=y))
        lb = n**3 * m**2 / (n - 1) * (S(y / s, p) - S(y / s**2, p)) ** 2
        ub = n * n * m * m * sum((s - 1) / s ** (l + 1) * (S(y / s, p) - S(y / s, l)) ** 2 for l in range(p))
        assert bd.G_LB == pytest.approx(lb, rel=1e-12)
        assert bd.G_UB == pytest.approx(ub, rel=1e-12)
        assert bd.dbar == pytest.approx(n * m / (n - 1) * (S(y / s, p) - S(y / s**2, p)), rel=1e-12)


@given(designs_with_weights())
def test_bound_containment(Dw):
    D, w = Dw
    bd = bounds(*D.shape, w)
    phi = phi_sd_fast(D, w)
    G = distance_matrix(D, w).G
    slack = 1e-10 * max(1.0, abs(phi))
    assert bd.phi_LB - slack <= phi <= bd.phi_UB + slack
    assert bd.G_LB * (1 - 1e-12) <= G <= bd.G_UB * (1 + 1e-12)


@pytest.mark.parametrize("shape", [(9, 8, 3, 2), (9, 4, 3, 2), (8, 5, 2, 3), (12, 3, 2, 2)])
def test_worst_case_attains_upper_bound(shape):
    w = make_weights("enumerator", shape[3], s=shape[2], y=0.3)
    D = worst_case_design(*shape)
    bd = bounds(*shape, w, exact=True, design=D)
    assert bd.attained_ub
    assert phi_sd_fast(D, w, exact=True) == bd.phi_UB


@given(designs_with_weights())
def test_lb_flag_iff_constant_distances(Dw):
    D, w = Dw
    bd = bounds(*D.shape, w, design=D)
    d = distance_matrix(D, w).d[~np.eye(D.n, dtype=bool)]
    assert bd.attained_lb == bool(np.max(np.abs(d - bd.dbar)) <= 1e-9)


def test_bounds_preconditions(constant):
    with pytest.raises(ValueError):
        bounds(10, 3, 3, 2, constant)
    with pytest.raises(ValueError):
        bounds(9, 1, 3, 2, constant)


# -- NRT representation and distance exports --------------------------------------

@given(designs_with_weights())
def test_nrt_form_matches_distances(Dw):
    D, w = Dw
    dm = distance_matrix(D, w, exact=True)
    for a in range(D.n):
        for b in range(D.n):
            assert dab_nrt(D, w, a, b, exact=True) == dm.exact(a, b)


def test_nrt_form_edge_cases():
    w = make_weights("exponential", 2, y=0.5)
    D = Design([[0], [8]], 3, 2)
    kc = kernel_constants(w, 3, 2, 2, 2, exact=True)
    assert dab_nrt(D, w, 0, 0, exact=True) == 0
    assert dab_nrt(D, w, 0, 1, exact=True) == kc.A0 - w.exact[0]


def test_distance_distribution_examples(gsoa_9_8, constant):
    dist = distance_distribution(gsoa_9_8, constant)
    assert dist.values == [(pytest.approx(26 / 9), 36)]
    assert dist.count == 36
    two = Design([[0, 1], [1, 0]], 2, 1)
    assert distance_distribution(two, make_weights("constant", 1)).count == 1


def test_worst_case_distance_support():
    w = make_weights("constant", 2)
    D = worst_case_design(18, 4, 3, 2)
    kc = kernel_constants(w, 3, 2, 4, 18, exact=True)
    allowed = {float(4 * (kc.A0 - kc.A0_partial[l])) for l in range(2)} | {0.0}
    got = {v for v, _ in distance_distribution(D, w).values}
    assert all(any(abs(g - a) < 1e-12 for a in allowed) for g in got)


def test_distances_csv(gsoa_9_8, constant):
    buf = io.StringIO()
    write_distances_csv(gsoa_9_8, constant, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "a,b,d"
    assert len(lines) == 37
    assert all(float(ln.split(",")[2]) == pytest.approx(26 / 9, rel=1e-15) for ln in lines[1:])


# -- non-power-of-s level counts --------------------------------------------------

def test_lhd_strata_match_midpoint_floors():
    rng = np.random.default_rng(19)
    x = np.stack([rng.permutation(19) for _ in range(5)], axis=1)
    lhd = Design(x, 19, 1)
    for s in (2, 3):
        E = lhd.with_kernel(s)
        assert E.p == (4 if s == 2 else 2)
        z = (2 * x + 1) / 38
        for i in range(E.p + 1):
            assert np.array_equal(E.strata(i), np.floor(s**i * z).astype(int))
        w = make_weights("constant", E.p)
        assert not E.is_u_type
        assert phi_sd(E, w).path == "oracle"
