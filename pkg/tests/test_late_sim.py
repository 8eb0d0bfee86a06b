import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latepoints.errors import DomainError, IncompleteTraceError, ResourceError
from latepoints.late_sim import (
    CSV_HEADER,
    LateSet,
    Spec,
    count_tuples,
    count_tuples_naive,
    csv_rows,
    estimate_exponent,
    estimate_exponents,
    fit_exponent,
    late_set,
    late_threshold,
    run_experiment,
    tuples_from_cliques,
)
from latepoints.lattice_walk import simulate_cover, torus_d2

seeds = st.integers(0, 2**32 - 1)


def random_late_set(n, k, rng):
    rng = np.random.default_rng(rng)
    flat = np.sort(rng.choice(n * n, size=k, replace=False))
    return LateSet(n, 0.3, np.column_stack(np.divmod(flat, n)).astype(np.int64))


def brute_tuples(ls, j, beta):
    """Count by enumerating every ordered j-tuple of indices."""
    r = ls.n**beta
    close = torus_d2(ls.sites[:, None], ls.sites[None], ls.n) <= r * r + 1e-9
    total = distinct = 0
    for t in itertools.product(range(len(ls)), repeat=j):
        if all(close[a, b] for a, b in itertools.combinations(t, 2)):
            total += 1
            distinct += len(set(t)) == j
    return total, distinct


# -- late sets ---------------------------------------------------------------


def test_threshold_uses_natural_log():
    assert late_threshold(64, 0.5) == pytest.approx(2 / math.pi * (64 * math.log(64)) ** 2)


def test_late_set_limits():
    tr = simulate_cover(16, 3)
    assert len(late_set(tr, 1e-12)) == 16 * 16 - 1  # every site but the start
    assert len(late_set(tr, 0.0)) == 256
    assert len(late_set(tr, 5.0)) == 0
    with pytest.raises(DomainError):
        late_set(tr, -0.1)


def test_late_set_requires_complete_trace():
    with pytest.raises(IncompleteTraceError):
        late_set(simulate_cover(16, 0, cap=10), 0.3)


@settings(max_examples=20)
@given(seeds, st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_late_sets_nest(seed, a1, a2):
    tr = simulate_cover(12, seed)
    lo, hi = sorted((a1, a2))
    small = late_set(tr, hi).as_set()
    assert small <= late_set(tr, lo).as_set()
    assert all(tr.first_hit[x, y] >= late_threshold(12, hi) for x, y in small)


# -- tuple counting ----------------------------------------------------------


@settings(max_examples=40)
@given(seeds, st.integers(1, 4), st.floats(0.1, 0.95), st.integers(0, 14))
def test_bucketed_matches_brute_force(seed, j, beta, k):
    ls = random_late_set(16, k, seed)
    got = count_tuples(ls, j, beta)
    assert (got.count, got.count_distinct) == brute_tuples(ls, j, beta)
    assert got.method == "bucketed"


@settings(max_examples=30)
@given(seeds, st.integers(1, 5), st.floats(0.1, 0.95))
def test_bucketed_matches_naive(seed, j, beta):
    ls = random_late_set(48, {4: 30, 5: 20}.get(j, 60), seed)
    fast, slow = count_tuples(ls, j, beta), count_tuples_naive(ls, j, beta)
    assert (fast.count, fast.count_distinct) == (slow.count, slow.count_distinct)


def test_bucketed_matches_naive_large_set(rng):
    ls = random_late_set(128, 2000, rng)
    for j in (2, 3):
        fast, slow = count_tuples(ls, j, 0.4), count_tuples_naive(ls, j, 0.4)
        assert (fast.count, fast.count_distinct) == (slow.count, slow.count_distinct)


def test_count_examples(rng):
    ls = random_late_set(32, 40, rng)
    assert count_tuples(ls, 1, 0.5).count == 40
    assert count_tuples(ls, 2, 0.99).count == 40**2  # 32^0.99 exceeds the torus diameter
    assert count_tuples(ls, 3, 0.99).count_distinct == 40 * 39 * 38
    empty = LateSet(32, 0.9, np.zeros((0, 2), dtype=np.int64))
    assert count_tuples(empty, 3, 0.5).count == 0


@settings(max_examples=30)
@given(seeds, st.integers(2, 5), st.floats(0.1, 0.8), st.floats(0.01, 0.15))
def test_count_monotone_in_j_and_beta(seed, j, beta, step):
    ls = random_late_set(32, 30, seed)
    c = count_tuples(ls, j, beta).count
    assert c >= count_tuples(ls, j - 1, beta).count
    assert c >= len(ls)
    assert count_tuples(ls, j, beta + step).count >= c


def test_naive_limit():
    with pytest.raises(ResourceError):
        count_tuples_naive(random_late_set(16, 100, 0), 4, 0.5, limit=1000)


def test_tuples_from_cliques():
    # index s holds the s-clique count; a triangle has 3 vertices, 3 edges, 1 triangle
    assert tuples_from_cliques([0, 3, 3, 1], 3) == (3 + 3 * 6 + 6, 6)
    with pytest.raises(DomainError):
        count_tuples(random_late_set(8, 3, 0), 0, 0.5)


# -- experiments -------------------------------------------------------------


def test_run_experiment_rows():
    rows = list(run_experiment([(0.3, 0.5, 2), (0.2, 0.5, 1)], [8, 12], 2, 7))
    assert [(r.n, r.replica, r.j) for r in rows] == [
        (8, 0, 2), (8, 0, 1), (8, 1, 2), (8, 1, 1), (12, 0, 2), (12, 0, 1), (12, 1, 2), (12, 1, 1)]
    for r in rows:
        ls = late_set(simulate_cover(r.n, 7, r.replica), r.alpha)
        assert r.late_count == len(ls)
        assert r.tuple_count == count_tuples(ls, r.j, r.beta).count
    assert len(next(csv_rows(rows))) == len(CSV_HEADER)


def test_run_experiment_threads_agree():
    a = list(run_experiment([(0.3, 0.5, 2)], [8, 16], 4, 3, threads=1))
    b = list(run_experiment([(0.3, 0.5, 2)], [8, 16], 4, 3, threads=2))
    assert a == b


def test_run_experiment_validation():
    with pytest.raises(DomainError):
        list(run_experiment([(0.3, 1.5, 2)], [8], 1, 0))
    with pytest.raises(DomainError):
        list(run_experiment([(0.3, 0.5, 2)], [8], 0, 0))


def test_fit_exponent_exact_power_law():
    counts = {n: [n**1.5, n**1.5] for n in (16, 32, 64)}
    est = fit_exponent(counts, 1, 0.25, 0.5)
    assert est.slope == pytest.approx(1.5, abs=1e-12)
    assert est.rho_hat == pytest.approx(1.5)


def test_fit_exponent_censored_rows():
    counts = {16: [0, 0], 32: [4, 6], 64: [16, 24], 128: [64, 96]}
    est = fit_exponent(counts, 1, 0.5, 0.5)
    assert est.table[0].censored and est.table[0].zero_replicas == 2
    assert not est.table[1].censored
    assert est.slope == pytest.approx(2.0, abs=1e-12)


def test_estimate_exponent_grid_validation():
    with pytest.raises(DomainError):
        estimate_exponent(0.3, 0.5, 1, [16, 32], 2, 0)
    with pytest.raises(DomainError):
        estimate_exponent(0.3, 0.5, 1, [32, 16, 64], 2, 0)


def test_estimate_exponents_share_runs():
    specs = [Spec(0.3, 0.5, 1), Spec(0.3, 0.5, 2)]
    both = estimate_exponents(specs, [8, 12, 16], 3, 5)
    single = estimate_exponent(0.3, 0.5, 2, [8, 12, 16], 3, 5)
    assert both[specs[1]].slope == pytest.approx(single.slope, abs=0)
