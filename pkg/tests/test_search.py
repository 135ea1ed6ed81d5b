import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stratdisc import make_weights
from stratdisc.metrics import distance_matrix, phi_sd_fast
from stratdisc.search import SearchConfig, _Walker, incremental_swap_delta, minimize_phi_sd, random_u_type


def test_random_u_type_is_balanced_and_seeded():
    D = random_u_type(18, 5, 3, 2, seed=3)
    assert D.is_u_type and D.shape == (18, 5, 3, 2)
    assert D == random_u_type(18, 5, 3, 2, seed=3)
    with pytest.raises(ValueError):
        random_u_type(10, 2, 3, 2)


@pytest.mark.parametrize("tag,kw", [("constant", {}), ("exponential", {"y": 0.3}), ("enumerator", {"y": 0.1})])
def test_incremental_delta_matches_recomputation(tag, kw):
    rng = np.random.default_rng(0)
    for trial in range(1000):
        s, p = [(2, 2), (3, 2), (2, 3)][trial % 3]
        D = random_u_type(2 * s**p, 4, s, p, rng)
        w = make_weights(tag, p, s=s, **kw)
        k = int(rng.integers(D.m))
        a, b = rng.choice(D.n, 2, replace=False)
        if D.x[a, k] == D.x[b, k]:
            continue
        before = distance_matrix(D, w, exact=True)
        x = D.x.copy()
        x[[a, b], k] = x[[b, a], k]
        after = distance_matrix(type(D)(x, s, p), w, exact=True)
        assert incremental_swap_delta(D, before, k, a, b, w) == after.G_exact - before.G_exact
        if trial % 50 == 0:
            fl = incremental_swap_delta(D, distance_matrix(D, w), k, a, b, w)
            assert fl == pytest.approx(float(after.G_exact - before.G_exact), abs=1e-9)


def test_incremental_delta_rejects_noop():
    D = random_u_type(18, 3, 3, 2, seed=0)
    w = make_weights("constant", 2)
    dm = distance_matrix(D, w, exact=True)
    with pytest.raises(ValueError):
        incremental_swap_delta(D, dm, 0, 1, 1, w)
    a, b = np.flatnonzero(D.x[:, 0] == D.x[0, 0]).tolist()
    with pytest.raises(ValueError):
        incremental_swap_delta(D, dm, 0, a, b, w)


@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_walker_stays_exact_and_u_type(seed, steps):
    rng = np.random.default_rng(seed)
    D = random_u_type(9, 4, 3, 2, rng)
    w = make_weights("exponential", 2, y=0.5)
    walk = _Walker(D, w, exact=True)
    for _ in range(steps):
        k = int(rng.integers(4))
        a, b = (int(v) for v in rng.choice(9, 2, replace=False))
        if walk.x[a, k] == walk.x[b, k]:
            continue
        dG, step = walk.delta(k, a, b)
        walk.apply(k, a, b, step, dG)
    fresh = distance_matrix(type(D)(walk.x, 3, 2), w, exact=True)
    assert np.array_equal(walk.d, fresh.scaled.astype(np.int64))
    assert walk.G == int(np.sum(fresh.scaled**2))
    assert type(D)(walk.x, 3, 2).is_u_type


def test_swap_then_inverse_cancels():
    D = random_u_type(8, 3, 2, 2, seed=1)
    w = make_weights("constant", 2)
    walk = _Walker(D, w, exact=True)
    a, b = 0, int(np.flatnonzero(walk.x[:, 0] != walk.x[0, 0])[0])
    d1, st1 = walk.delta(0, a, b)
    walk.apply(0, a, b, st1, d1)
    d2, _ = walk.delta(0, a, b)
    assert d1 + d2 == 0


def test_reaches_bound_on_small_shape():
    w = make_weights("constant", 2)
    res = minimize_phi_sd((4, 3, 2, 2), w, SearchConfig(iterations=10000, restarts=1, seed=0))
    assert res.phi == res.phi_lb
    assert res.design.is_u_type


def test_history_is_monotone_and_result_consistent():
    w = make_weights("constant", 2)
    res = minimize_phi_sd((9, 6, 3, 2), w, SearchConfig(iterations=3000, restarts=2, seed=5, stop_at_bound=False))
    for hist in res.history:
        values = [g for _, g in hist]
        assert values == sorted(values, reverse=True)
    assert res.phi == pytest.approx(phi_sd_fast(res.design, w), rel=1e-12)
    assert res.phi == min(res.restart_best)
    assert res.gap >= -1e-15


def test_deterministic_and_thread_independent():
    w = make_weights("exponential", 2, y=0.5)
    cfg = SearchConfig(iterations=1500, restarts=3, seed=7)
    r1 = minimize_phi_sd((9, 5, 3, 2), w, cfg)
    r2 = minimize_phi_sd((9, 5, 3, 2), w, SearchConfig(iterations=1500, restarts=3, seed=7, threads=3))
    assert r1.design == r2.design and r1.restart_best == r2.restart_best and r1.history == r2.history


def test_zero_threshold_continuation_is_stable():
    w = make_weights("constant", 2)
    first = minimize_phi_sd((9, 4, 3, 2), w, SearchConfig(iterations=4000, restarts=1, seed=2))
    cont = minimize_phi_sd((9, 4, 3, 2), w, SearchConfig(iterations=2000, restarts=1, seed=3, initial_fraction=0,
                                                         stop_at_bound=False), initial=first.design)
    assert cont.phi <= first.phi


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(iterations=0)
    with pytest.raises(ValueError):
        SearchConfig(decay=1.5)
