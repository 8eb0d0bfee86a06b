import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latepoints.errors import DomainError
from latepoints.exponents import (
    ExponentParams,
    crossover_beta,
    crossover_beta_prob,
    exponent_grid,
    monotonicity_table,
    rho,
    rho_branch,
    rho_branches,
    rho_hat,
    rho_hat_branch,
    rho_hat_branches,
)

unit = st.floats(0.01, 0.99)
js = st.integers(1, 8)


@pytest.mark.parametrize("bad", [(0, 0.5, 0.5), (1, 0.0, 0.5), (1, 1.0, 0.5), (1, 0.5, 0.0), (1, 0.5, 1.0), (1.5, 0.5, 0.5)])
def test_params_validation(bad):
    with pytest.raises(DomainError):
        ExponentParams(*bad)


@pytest.mark.parametrize("beta", [0.1, 0.5, 0.9])
def test_rho_hat_j1(beta):
    assert rho_hat(ExponentParams(1, 0.5, beta)) == pytest.approx(1.0, abs=1e-15)


def test_rho_hat_examples():
    first = rho_hat_branch(ExponentParams(2, 0.25, 0.5))
    assert first.branch == "first" and first.value == pytest.approx(7 / 3, abs=1e-12)
    second = rho_hat_branch(ExponentParams(2, 0.81, 0.9))
    assert second.branch == "second" and second.value == pytest.approx(0.908845, abs=1e-4)
    assert second.value == pytest.approx(2 * (3 - 2 * math.sqrt(1.62)), abs=1e-14)


def test_rho_examples():
    p = rho_branch(ExponentParams(2, 0.25, 0.9))
    assert p.branch == "first" and p.value == pytest.approx(2 + 1.8 - 1 / 1.1, abs=1e-12)
    q = rho_branch(ExponentParams(2, 0.81, 0.5))
    assert q.branch == "second" and q.value == pytest.approx(0.72, abs=1e-12)


def test_rho_branches_meet_at_crossover():
    beta = crossover_beta_prob(2, 0.25)
    assert beta == pytest.approx(1.0)
    b = beta - 1e-9
    first, second = rho_branches(ExponentParams(2, 0.25, b))
    assert abs(first - second) < 1e-7


def test_crossover_examples():
    assert crossover_beta(2, 0.25) == pytest.approx(1 + (1 - math.sqrt(0.5)), abs=1e-12)
    assert crossover_beta(2, 0.25) == pytest.approx(1.2929, abs=1e-4)
    assert crossover_beta(2, 0.81) == pytest.approx(0.7272, abs=1e-4)
    assert crossover_beta(4, 0.25) == 1.0
    assert crossover_beta(1, 0.3) is None
    assert crossover_beta_prob(1, 0.3) is None


def test_monotonicity_example():
    table = monotonicity_table([0.5], [0.5], 2)
    assert table.shape == (1, 1, 1)
    assert table[0, 0, 0] == pytest.approx(2 / 3, abs=1e-12)
    assert rho_hat(ExponentParams(2, 0.5, 0.5)) == pytest.approx(5 / 3, abs=1e-12)


def test_monotonicity_full_grid():
    grid = np.linspace(0.01, 0.99, 50)
    table = monotonicity_table(grid, grid, 6)
    assert table.shape == (5, 50, 50)
    assert table.min() >= -1e-12


def test_rho_hat_j1_tends_to_zero():
    assert rho_hat(ExponentParams(1, 1 - 1e-9, 0.5)) == pytest.approx(0, abs=1e-8)


@given(st.integers(2, 8), unit)
def test_branch_continuity(j, alpha):
    beta = crossover_beta(j, alpha)
    if not 0 < beta < 1:
        return
    first, second = rho_hat_branches(ExponentParams(j, alpha, beta))
    assert abs(first - second) < 1e-12


@given(js, unit, unit, st.floats(1e-3, 0.5))
def test_rho_hat_decreasing_in_alpha(j, alpha, beta, step):
    a2 = alpha + step
    if a2 >= 1:
        return
    assert rho_hat(ExponentParams(j, a2, beta)) < rho_hat(ExponentParams(j, alpha, beta))


@given(st.integers(2, 6), unit, unit)
def test_rho_hat_nondecreasing_in_j(j, alpha, beta):
    assert rho_hat(ExponentParams(j, alpha, beta)) >= rho_hat(ExponentParams(j - 1, alpha, beta)) - 1e-12


@given(js, unit, unit)
def test_branch_is_the_smaller_one(j, alpha, beta):
    first, second = rho_hat_branches(ExponentParams(j, alpha, beta))
    if second is not None:
        assert rho_hat(ExponentParams(j, alpha, beta)) <= max(first, second)


def test_exponent_grid_rows():
    rows = list(exponent_grid(2, [0.25], [0.5]))
    assert len(rows) == 2
    j, a, b, hat, prob, branch = rows[1]
    assert (j, a, b, branch) == (2, 0.25, 0.5, "first")
    assert hat == pytest.approx(7 / 3)
    assert prob == rho(ExponentParams(2, 0.25, 0.5))
