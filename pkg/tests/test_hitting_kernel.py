import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latepoints.errors import ConfigError, DomainError, ScaleError
from latepoints.hitting_kernel import (
    PointConfig,
    build_q,
    build_u,
    circle_config,
    cofactor_hit_probabilities,
    cofactor_hit_probability,
    cofactors,
    direct_hit,
    hit_report,
    last_exit_decomposition_check,
    parse_domain,
    random_torus_config,
    scaled_kernel_gap,
    summed_bounds,
    verify_inverse_identity,
    witness_hit,
)
from latepoints.lattice_walk import Disk, Torus, absorb, first_step
from latepoints.ultrametric import equidistant, matrix_chi

T16 = Torus(16)
seeds = st.integers(0, 2**32 - 1)


def one_point():
    return circle_config([(8, 8)], (10, 9), (8, 8), 5, 16)


# -- configuration -----------------------------------------------------------


def test_parse_domain():
    assert isinstance(parse_domain("torus:16"), Torus)
    assert parse_domain("disk:9").radius == 9
    with pytest.raises(DomainError):
        parse_domain("sphere:4")


def test_config_errors():
    with pytest.raises(ConfigError):
        PointConfig((), (0, 0))
    with pytest.raises(ConfigError):
        build_q(PointConfig([(1, 1), (1, 1)], (3, 3)), T16)
    with pytest.raises(ConfigError):
        build_q(PointConfig([(1, 1)], (1, 1)), T16)
    with pytest.raises(ConfigError):
        build_q(PointConfig([(1, 1)], (3, 3), frozenset({(1, 1)})), T16)
    with pytest.raises(ConfigError):
        build_q(PointConfig([(1, 1)], (3, 3), frozenset({(3, 3)})), T16)
    with pytest.raises(ConfigError):
        build_q(PointConfig([(9, 0)], (0, 0)), Disk(5))
    with pytest.raises(ConfigError):
        cofactor_hit_probability(one_point(), T16, 1)


# -- Q and U -----------------------------------------------------------------


def test_j1_scalar_identities():
    cfg = one_point()
    q = build_q(cfg, T16)[0, 0]
    u = build_u(cfg, T16)[0, 0]
    assert q >= 1 and 0 < u < 1
    assert abs(1 / q - (1 - u)) < 1e-12
    b = witness_hit(cfg, T16)[0]
    assert cofactor_hit_probability(cfg, T16, 0) == pytest.approx(b / q, rel=1e-12)
    assert cofactor_hit_probability(cfg, T16, 0, form="factored") == pytest.approx(b / q, rel=1e-12)
    assert last_exit_decomposition_check(cfg, T16) < 1e-12


def test_u_is_return_probability_for_j1():
    cfg = one_point()
    ix = T16.index((8, 8))
    kill = [T16.index(k) for k in cfg.kill_region]
    fixed = np.array([ix, *kill, T16.index(cfg.witness)])
    vals = np.zeros(len(fixed))
    vals[0] = 1.0
    h = absorb(T16, fixed, vals)
    assert build_u(cfg, T16)[0, 0] == pytest.approx(first_step(T16, h, ix), abs=1e-14)


@settings(max_examples=20)
@given(seeds, st.integers(1, 4))
def test_q_symmetric_and_u_substochastic(seed, j):
    cfg = random_torus_config(16, j, seed)
    Q, U = build_q(cfg, T16), build_u(cfg, T16)
    assert np.allclose(Q, Q.T, rtol=1e-10, atol=1e-12)
    assert Q.min() >= 0 and np.diag(Q).min() >= 1
    rows = U.sum(axis=1)
    assert np.all((rows > 0) & (rows < 1))
    assert verify_inverse_identity(Q, U) < 1e-9
    assert matrix_chi(Q) > 0


def test_q_decreases_when_kill_region_grows():
    pts, y = [(7, 7), (9, 8)], (8, 11)
    small = build_q(circle_config(pts, y, (8, 8), 4, 16), T16)
    big = build_q(circle_config(pts, y, (8, 8), 6, 16), T16)
    free = build_q(PointConfig(pts, y), T16)
    assert np.all(small < big) and np.all(big < free)


@pytest.mark.parametrize("j", [2, 3])
def test_inverse_identity_examples(j):
    cfg = random_torus_config(16, j, 100 + j)
    assert verify_inverse_identity(build_q(cfg, T16), build_u(cfg, T16)) < 1e-9


# -- hitting formula ---------------------------------------------------------


def test_cofactors_match_determinants():
    Q = build_q(random_torus_config(16, 3, 7), T16)
    det, C = cofactors(Q)
    assert det == pytest.approx(np.linalg.det(Q), rel=1e-12)
    for u in range(3):
        for i in range(3):
            minor = np.delete(np.delete(Q, u, 0), i, 1)
            assert C[u, i] == pytest.approx((-1) ** (u + i) * np.linalg.det(minor), rel=1e-10, abs=1e-12)


@settings(max_examples=25)
@given(seeds, st.integers(1, 4), st.sampled_from([12, 16, 24]))
def test_cramer_form_matches_direct_solve(seed, j, n):
    cfg = random_torus_config(n, j, seed)
    rep = hit_report(cfg, Torus(n))
    assert rep.rel_error < 1e-9


def test_j2_example_on_16_torus():
    rep = hit_report(random_torus_config(16, 2, 1), T16)
    assert rep.rel_error < 1e-9


def test_factored_form_exact_when_witness_hits_are_equal():
    # points symmetric about the witness have equal hit probabilities
    cfg = circle_config([(6, 8), (10, 8)], (8, 8), (8, 8), 6, 16)
    b = witness_hit(cfg, T16)
    assert b[0] == pytest.approx(b[1], rel=1e-12)
    assert np.allclose(cofactor_hit_probabilities(cfg, T16, "factored"), direct_hit(cfg, T16), rtol=1e-9)


def test_factored_form_differs_for_unequal_hits():
    cfg = circle_config([(6, 8), (9, 8)], (10, 8), (8, 8), 6, 16)
    fact = cofactor_hit_probabilities(cfg, T16, "factored")
    assert not np.allclose(fact, direct_hit(cfg, T16), rtol=1e-6)
    with pytest.raises(ValueError):
        cofactor_hit_probabilities(cfg, T16, "other")


@settings(max_examples=20)
@given(seeds, st.integers(1, 4))
def test_last_exit_and_summed_bounds(seed, j):
    cfg = random_torus_config(16, j, seed)
    assert last_exit_decomposition_check(cfg, T16) < 1e-9
    lo, total, hi = summed_bounds(cfg, T16)
    assert lo - 1e-12 <= total <= hi + 1e-12


def test_witness_adjacent_to_point():
    cfg = circle_config([(8, 8), (6, 9)], (9, 8), (8, 8), 5, 16)
    assert last_exit_decomposition_check(cfg, T16) < 1e-9
    assert hit_report(cfg, T16).rel_error < 1e-9


def test_disk_domain():
    cfg = PointConfig([(0, 0), (3, 1)], (-2, 2))
    d = Disk(8)
    assert hit_report(cfg, d).rel_error < 1e-9
    assert verify_inverse_identity(build_q(cfg, d), build_u(cfg, d)) < 1e-9


# -- scaled kernel -----------------------------------------------------------


def test_scaled_kernel_gap_decreases():
    A = equidistant(2, 0.5)
    gaps = [scaled_kernel_gap(A, n) for n in (32, 64, 128, 256)]
    assert np.all(np.diff(gaps) < 0)


def test_scaled_kernel_gap_needs_room():
    with pytest.raises(ScaleError):
        scaled_kernel_gap(equidistant(2, 0.05), 8)
