"""Closed-form exponents for clustered j-tuples of late points.

``rho_hat`` is the growth exponent of the expected number of j-tuples of
alpha-late points with all pairwise distances at most ``n**beta``;
``rho`` is the in-probability counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ExponentParams:
    j: int
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise DomainError(f"j must be a positive integer, got {self.j}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")


class Exponent(NamedTuple):
    value: float
    branch: str  # "first" (clustered) or "second" (spread)


def crossover_beta(j: int, alpha: float) -> float | None:
    """Scale where ``rho_hat`` switches branch; ``None`` for ``j = 1``.

    Values above 1 mean the second branch is unreachable for beta in (0, 1).
    """
    if j == 1:
        return None
    return 1 + (1 - math.sqrt(j * alpha)) / (j - 1)


def crossover_beta_prob(j: int, alpha: float) -> float | None:
    if j == 1:
        return None
    return j / (j - 1) * (1 - math.sqrt(alpha))


def _clustered(j, alpha, beta):
    return 2 + 2 * (j - 1) * beta - 2 * j * alpha / ((1 - beta) * (j - 1) + 1)


def rho_hat_branches(p: ExponentParams) -> tuple[float, float | None]:
    j, a = p.j, p.alpha
    second = None if j == 1 else 2 * (j + 1 - 2 * math.sqrt(j * a))
    return _clustered(j, a, p.beta), second


def rho_hat_branch(p: ExponentParams) -> Exponent:
    first, second = rho_hat_branches(p)
    beta_star = crossover_beta(p.j, p.alpha)
    if beta_star is None or p.beta <= beta_star:
        return Exponent(first, "first")
    return Exponent(second, "second")


def rho_hat(p: ExponentParams) -> float:
    """Growth exponent of the expected clustered j-tuple count.

    For ``j = 1`` this is ``2 - 2 alpha`` for every beta.
    """
    return rho_hat_branch(p).value


def rho_branches(p: ExponentParams) -> tuple[float, float | None]:
    j, a, b = p.j, p.alpha, p.beta
    second = None if j == 1 else 4 * j * (1 - math.sqrt(a)) - 2 * j * (1 - math.sqrt(a)) ** 2 / b
    return _clustered(j, a, b), second


def rho_branch(p: ExponentParams) -> Exponent:
    first, second = rho_branches(p)
    beta_star = crossover_beta_prob(p.j, p.alpha)
    if beta_star is None or p.beta <= beta_star:
        return Exponent(first, "first")
    return Exponent(second, "second")


def rho(p: ExponentParams) -> float:
    """In-probability exponent; ``j = 1`` always uses the first branch."""
    return rho_branch(p).value


def monotonicity_table(alpha_grid, beta_grid, j_max: int) -> np.ndarray:
    """Differences ``rho_hat_j - rho_hat_{j-1}``.

    Returns an array of shape ``(j_max - 1, len(alpha_grid), len(beta_grid))``
    whose slice ``k`` holds the difference for ``j = k + 2``.
    """
    alpha_grid = list(alpha_grid)
    beta_grid = list(beta_grid)
    vals = np.empty((j_max, len(alpha_grid), len(beta_grid)))
    for j in range(1, j_max + 1):
        for a, alpha in enumerate(alpha_grid):
            for b, beta in enumerate(beta_grid):
                vals[j - 1, a, b] = rho_hat(ExponentParams(j, alpha, beta))
    return np.diff(vals, axis=0)


def exponent_grid(j_max: int, alpha_grid, beta_grid):
    """Rows ``(j, alpha, beta, rho_hat, rho, branch)`` for CSV output."""
    for j in range(1, j_max + 1):
        for alpha in alpha_grid:
            for beta in beta_grid:
                p = ExponentParams(j, alpha, beta)
                hat = rho_hat_branch(p)
                yield j, alpha, beta, hat.value, rho(p), hat.branch
