"""Green kernel Q on a finite point set and the cofactor hitting formula.

For distinct points ``X = (x_1, ..., x_j)``, a witness ``y`` and a killing
set ``D~``:

* ``Q[i, l]`` is the expected number of visits to ``x_l`` from ``x_i``
  before the walk enters ``D~`` or hits ``y``;
* ``U[i, l]`` is the probability that the first return to ``X`` (before
  killing) lands on ``x_l``;
* ``Q^{-1} = E - U``.

Every quantity here is an exact sparse solve over the finite domain; the
oracles use absorbing sets that differ from the ones the formulas use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .config_geometry import realize_config
from .errors import ConditioningError, ConfigError, DomainError, ScaleError
from .lattice_walk import Disk, Site, Torus, absorb, first_step, green_columns, outer_boundary, scaled_green_matrix
from .ultrametric import as_ultra, chi, matrix_chi


@dataclass(frozen=True)
class PointConfig:
    points: tuple
    witness: Site
    kill_region: frozenset = frozenset()

    def __post_init__(self):
        pts = tuple(tuple(map(int, p)) for p in self.points)
        y = tuple(map(int, self.witness))
        kill = frozenset(tuple(map(int, k)) for k in self.kill_region)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "witness", y)
        object.__setattr__(self, "kill_region", kill)
        if not pts:
            raise ConfigError("need at least one point")

    @property
    def j(self) -> int:
        return len(self.points)


def circle_config(points, witness, center, radius, n: int) -> PointConfig:
    """Configuration on the torus killed on the outer boundary of ``D(center, radius)``."""
    return PointConfig(points, witness, frozenset(outer_boundary(center, radius, n)))


def parse_domain(text: str):
    """``"torus:N"`` or ``"disk:R"``."""
    kind, _, size = text.partition(":")
    if kind == "torus":
        return Torus(int(size))
    if kind == "disk":
        return Disk(int(size))
    raise DomainError(f"unknown domain {text!r}; use torus:N or disk:R")


class _Indexed(NamedTuple):
    X: np.ndarray
    y: int
    kill: np.ndarray


def _index(cfg: PointConfig, domain) -> _Indexed:
    for p in cfg.points + (cfg.witness,):
        if not domain.contains(p):
            raise ConfigError(f"site {p} lies outside {domain!r}")
    X = np.array([domain.index(p) for p in cfg.points], dtype=np.int64)
    y = domain.index(cfg.witness)
    kill = np.array(sorted({domain.index(k) for k in cfg.kill_region if domain.contains(k)}), dtype=np.int64)
    if len(set(X.tolist())) != len(X):
        raise ConfigError("points are not distinct")
    if y in set(X.tolist()):
        raise ConfigError("witness coincides with a point")
    if set(kill.tolist()) & set(X.tolist()):
        raise ConfigError("killing region meets the point set")
    if y in set(kill.tolist()):
        raise ConfigError("witness lies in the killing region")
    return _Indexed(X, y, kill)


def build_q(cfg: PointConfig, domain) -> np.ndarray:
    """Expected visits ``q[i, l]`` before ``D~`` or ``y``, one Green column per point."""
    ix = _index(cfg, domain)
    killed = np.append(ix.kill, ix.y)
    cols = green_columns(domain, killed, ix.X)
    return cols[ix.X]


def build_u(cfg: PointConfig, domain) -> np.ndarray:
    """First-return law on ``X`` before killing, from absorption solves."""
    ix = _index(cfg, domain)
    j = len(ix.X)
    fixed = np.concatenate([ix.X, ix.kill, [ix.y]])
    U = np.empty((j, j))
    for l in range(j):
        vals = np.zeros(len(fixed))
        vals[l] = 1.0
        h = absorb(domain, fixed, vals)
        for i in range(j):
            U[i, l] = first_step(domain, h, ix.X[i])
    return U


def witness_hit(cfg: PointConfig, domain) -> np.ndarray:
    """``P^{x_i}(T_y = tilde_tau ^ T_y)``: hit ``y`` before ``D~``, ignoring ``X``."""
    ix = _index(cfg, domain)
    fixed = np.append(ix.kill, ix.y)
    vals = np.zeros(len(fixed))
    vals[-1] = 1.0
    h = absorb(domain, fixed, vals)
    return h[ix.X]


def direct_hit(cfg: PointConfig, domain) -> np.ndarray:
    """Oracle for ``P^{x_u}(T_y = T_X ^ tilde_tau ^ T_y)``: first step, then hit ``y``
    before returning to ``X`` or entering ``D~``."""
    ix = _index(cfg, domain)
    fixed = np.concatenate([ix.X, ix.kill, [ix.y]])
    vals = np.zeros(len(fixed))
    vals[-1] = 1.0
    h = absorb(domain, fixed, vals)
    return np.array([first_step(domain, h, x) for x in ix.X])


def verify_inverse_identity(Q: np.ndarray, U: np.ndarray) -> float:
    """``max |Q^{-1} - (E - U)|``."""
    Q = np.asarray(Q, dtype=float)
    return float(np.abs(np.linalg.inv(Q) - (np.eye(len(Q)) - U)).max())


def cofactors(Q: np.ndarray) -> tuple[float, np.ndarray]:
    """``(det Q, C)`` with ``C[u, i]`` the cofactor of ``q[u, i]``, via one LU factorisation."""
    Q = np.asarray(Q, dtype=float)
    lu, piv = scipy.linalg.lu_factor(Q, check_finite=False)
    d = np.diag(lu)
    if np.abs(d).min() == 0 or np.abs(d).min() / np.abs(d).max() < 1e-13:
        raise ConditioningError("Q is numerically singular")
    sign = (-1) ** int(np.sum(piv != np.arange(len(piv))))
    det = sign * float(np.prod(d))
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(len(Q)), check_finite=False)
    adj = det * inv
    return det, adj.T


def cofactor_hit_probabilities(cfg: PointConfig, domain, form: str = "cramer") -> np.ndarray:
    """Hit-``y``-first probabilities for every start point, from cofactors of ``Q``.

    ``form="cramer"`` expands ``Q p = b`` by Cramer's rule,
    ``p_u = sum_i b_i C[i, u] / det Q``; it is exact.
    ``form="factored"`` is ``b_u sum_i C[u, i] / det Q``, which coincides with
    the exact value when all ``b_i`` are equal (in particular for ``j = 1``).
    """
    Q = build_q(cfg, domain)
    b = witness_hit(cfg, domain)
    det, C = cofactors(Q)
    if form == "cramer":
        return C.T @ b / det
    if form == "factored":
        return b * C.sum(axis=1) / det
    raise ValueError(f"unknown form {form!r}")


def cofactor_hit_probability(cfg: PointConfig, domain, u: int, form: str = "cramer") -> float:
    if not 0 <= u < cfg.j:
        raise ConfigError(f"start index {u} out of range")
    return float(cofactor_hit_probabilities(cfg, domain, form)[u])


def last_exit_decomposition_check(cfg: PointConfig, domain) -> float:
    """Residual of ``b_i = sum_l q[i, l] p_l`` with ``b`` and ``p`` from separate solves."""
    Q = build_q(cfg, domain)
    return float(np.abs(witness_hit(cfg, domain) - Q @ direct_hit(cfg, domain)).max())


class SummedBounds(NamedTuple):
    lower: float
    total: float
    upper: float


def summed_bounds(cfg: PointConfig, domain) -> SummedBounds:
    """``min_u b_u chi(Q) <= sum_u p_u <= max_u b_u chi(Q)``."""
    Q = build_q(cfg, domain)
    b = witness_hit(cfg, domain)
    c = matrix_chi(Q)
    return SummedBounds(float(b.min() * c), float(direct_hit(cfg, domain).sum()), float(b.max() * c))


class HitReport(NamedTuple):
    formula: np.ndarray
    oracle: np.ndarray
    rel_error: float


def hit_report(cfg: PointConfig, domain, form: str = "cramer") -> HitReport:
    formula = cofactor_hit_probabilities(cfg, domain, form)
    oracle = direct_hit(cfg, domain)
    scale = np.maximum(np.abs(oracle), np.finfo(float).tiny)
    return HitReport(formula, oracle, float(np.max(np.abs(formula - oracle) / scale)))


def random_torus_config(n: int, j: int, rng, radius: float | None = None) -> PointConfig:
    """Random points and witness on ``Z^2_n`` killed on a random circle boundary."""
    rng = np.random.default_rng(rng)
    radius = n / 3 if radius is None else radius
    center = tuple(int(v) for v in rng.integers(0, n, size=2))
    kill = set(outer_boundary(center, radius, n))
    free = [(x, y) for x in range(n) for y in range(n) if (x, y) not in kill]
    pick = rng.choice(len(free), size=j + 1, replace=False)
    sites = [free[k] for k in pick]
    return PointConfig(tuple(sites[:j]), sites[j], frozenset(kill))


def scaled_kernel_gap(A, n: int) -> float:
    """``|chi(pi G / (2 ln n)) - chi(A)|`` for the disk Green matrix on a realisation of ``A``.

    The points come from ``realize_config`` and must lie in ``D(0, n/3)``.
    """
    A = as_ultra(A)
    pts = realize_config(A, n)
    if np.any(np.hypot(pts[:, 0], pts[:, 1]) >= n / 3):
        raise ScaleError(f"realisation of A does not fit in D(0, n/3) at n={n}")
    return abs(matrix_chi(scaled_green_matrix(n, [tuple(p) for p in pts.tolist()])) - chi(A).chi)
