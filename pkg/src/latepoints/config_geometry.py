"""Point configurations on the torus, distance classes and matrix assignment.

A configuration is an ordered tuple of sites of ``Z^2_n``. ``E[M, M']``
holds the tuples whose pairwise torus distances satisfy
``M[i, l] <= d(x_i, x_l) <= M'[i, l]``; ``Ehat_delta[A]`` is the class with
``M = 2^-j n^(1 - A)`` and ``M' = 2^j n^(1 - A + delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, ResourceError, ScaleError
from .exponents import ExponentParams, rho_hat
from .lattice_walk import torus_d2
from .ultrametric import (
    DEFAULT_ETA,
    Branch,
    Leaf,
    UltraMatrix,
    as_ultra,
    chi,
    is_member,
    leaves,
    maximal_decompose,
    tree_matrix,
)

# relative slack on distance comparisons (distances are square roots of integers)
REL_TOL = 1e-12
DEFAULT_BUDGET = 50_000_000


@dataclass(frozen=True, eq=False)
class ConfigClass:
    """``E[lower, upper]`` on ``Z^2_n``; diagonals are ignored."""

    j: int
    n: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.shape != (self.j, self.j) or hi.shape != (self.j, self.j):
            raise DimensionError(f"bounds must be {self.j}x{self.j}")
        off = ~np.eye(self.j, dtype=bool)
        if np.any(lo[off] > hi[off]):
            raise ConfigError("lower bound exceeds upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, j: int, n: int, a: float, a_prime: float) -> "ConfigClass":
        """``E[(a), (a')]``: the same bounds for every pair."""
        return cls(j, n, np.full((j, j), float(a)), np.full((j, j), float(a_prime)))

    def config_class(self) -> "ConfigClass":
        return self


@dataclass(frozen=True, eq=False)
class EHatClass:
    A: UltraMatrix
    delta: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "A", as_ultra(self.A))
        if self.delta <= 0:
            raise DomainError("delta must be positive")

    @property
    def j(self) -> int:
        return self.A.dim

    def config_class(self) -> ConfigClass:
        a = np.asarray(self.A.entries, dtype=float)
        j, n = self.j, self.n
        return ConfigClass(j, n, 2.0**-j * n ** (1 - a), 2.0**j * n ** (1 - a + self.delta))


def pairwise_distances(points, n: int) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64)
    return np.sqrt(torus_d2(pts[:, None, :], pts[None, :, :], n))


def _within(d, lo, hi):
    return (d >= lo * (1 - REL_TOL)) & (d <= hi * (1 + REL_TOL))


def in_class(points, c) -> bool:
    """Whether ``points`` satisfies every off-diagonal distance bound of ``c``."""
    c = c.config_class()
    if len(points) != c.j:
        raise DimensionError(f"expected {c.j} points, got {len(points)}")
    if c.j == 1:
        return True
    d = pairwise_distances(points, c.n)
    off = ~np.eye(c.j, dtype=bool)
    return bool(np.all(_within(d[off], c.lower[off], c.upper[off])))


# -- matrix assignment -------------------------------------------------------


def _check_params(j, n, delta, beta, eta):
    if not 0 < beta < 1:
        raise DomainError("beta must lie in (0, 1)")
    if not 0 < eta <= min(beta, 1 - beta):
        raise DomainError(f"eta must lie in (0, min(beta, 1 - beta)], got {eta}")
    if delta <= 0:
        raise DomainError("delta must be positive")
    if 2.0 ** (j - 1) > n ** (delta / 2) * (1 + REL_TOL):
        raise ScaleError(
            f"n={n} is below the scale threshold for j={j}, delta={delta}: "
            f"need 2^(j-1) <= n^(delta/2), i.e. delta >= {min_delta(j, n):.4f}"
        )


def min_delta(j: int, n: int) -> float:
    """Smallest delta with ``2^(j-1) <= n^(delta/2)``."""
    return 2 * (j - 1) * math.log(2) / math.log(n)


def _check_base_class(d, n, beta, eta):
    j = len(d)
    if j < 2:
        return
    off = ~np.eye(j, dtype=bool)
    if not np.all(_within(d[off], n**eta, n**beta)):
        raise DomainError(f"configuration is outside E[(n^eta), (n^beta)] (eta={eta}, beta={beta})")


def _assign(d, idx, ln_n, delta, eta, out):
    """Fill ``out`` on ``idx`` so that the sub-configuration lies in Ehat_delta."""
    if len(idx) == 1:
        return
    sub = d[np.ix_(idx, idx)] + np.diag(np.full(len(idx), np.inf))
    a, b = np.unravel_index(np.argmin(sub), sub.shape)
    i0, l0 = idx[a], idx[b]
    rest = [i for i in idx if i != l0]
    _assign(d, rest, ln_n, delta / 2, eta, out)
    for l in rest:
        if l != i0:
            out[l0, l] = out[l, l0] = out[i0, l]
    out[i0, l0] = out[l0, i0] = min(1 - math.log(d[i0, l0]) / ln_n + delta, 1 - eta)


def assign_matrix(points, n: int, delta: float, beta: float, eta: float = DEFAULT_ETA) -> UltraMatrix:
    """Member ``A`` of M_j with entries in ``[1 - beta, 1 - eta]`` and ``points`` in Ehat_delta[A].

    The closest pair ``(i0, l0)`` is split off, the rest is assigned
    recursively with slack ``delta / 2``, ``x_l0`` copies the row of ``x_i0``
    and the pair itself gets ``(1 - log d / log n + delta) ^ (1 - eta)``.
    """
    j = len(points)
    _check_params(j, n, delta, beta, eta)
    out = np.eye(j)
    if j == 1:
        return UltraMatrix(out, eta)
    d = pairwise_distances(points, n)
    _check_base_class(d, n, beta, eta)
    if np.any(d[~np.eye(j, dtype=bool)] == 0):
        raise DomainError("points are not distinct")
    _assign(d, list(range(j)), math.log(n), delta, eta, out)
    return UltraMatrix(out, eta)


def _entry_caps(d, n, delta, eta):
    """Largest admissible entry per pair: from ``d <= 2^j n^(1 - b + delta)`` and ``b <= 1 - eta``."""
    j = len(d)
    with np.errstate(divide="ignore"):
        cap = 1 + delta - (np.log(d) - j * math.log(2)) / math.log(n)
    return np.minimum(cap, 1 - eta)


def _raise_levels(node, caps):
    """Raise every separation as far as the caps on the pairs it separates
    and the levels of its child nodes allow; the topology is kept."""
    if isinstance(node, Leaf):
        return node, math.inf
    kids = [_raise_levels(c, caps) for c in node.children]
    groups = [leaves(c) for c, _ in kids]
    cross = min(
        caps[np.ix_(groups[a], groups[b])].min()
        for a in range(len(groups)) for b in range(a + 1, len(groups))
    )
    level = max(node.separation, min(cross, min(lv for _, lv in kids)))
    return Branch(tuple(c for c, _ in kids), float(level)), level


def raise_to_caps(A: UltraMatrix, caps: np.ndarray) -> np.ndarray:
    """Entries of ``A`` with each tree level pushed up to the largest feasible value."""
    tree, _ = _raise_levels(maximal_decompose(A), np.asarray(caps, dtype=float))
    return tree_matrix(tree, A.dim)


class HDelta(NamedTuple):
    value: float
    matrix: UltraMatrix
    refined: bool


def h_delta_detail(points, n: int, delta: float, beta: float, eta: float = DEFAULT_ETA,
                   refine: bool = False) -> HDelta:
    """Upper approximation of ``inf chi(B)`` over admissible ``B`` with ``points`` in Ehat_delta[B].

    The starting point is ``assign_matrix``. With ``refine`` each level of
    its decomposition tree is raised, children first, to the largest value
    the upper distance bounds and ``1 - eta`` allow. Raising never breaks the
    lower bounds, so the result stays admissible; the smaller chi of the two
    is returned.
    """
    A = assign_matrix(points, n, delta, beta, eta)
    best = HDelta(chi(A).chi, A, False)
    if refine and len(points) > 1:
        d = pairwise_distances(points, n)
        B = raise_to_caps(A, _entry_caps(d, n, delta, eta))
        if is_member(B, eta):
            cand = UltraMatrix(B, eta)
            if in_class(points, EHatClass(cand, delta, n)):
                value = chi(cand).chi
                if value < best.value:
                    best = HDelta(value, cand, True)
    return best


def h_delta(points, n: int, delta: float, beta: float, eta: float = DEFAULT_ETA, refine: bool = False) -> float:
    return h_delta_detail(points, n, delta, beta, eta, refine).value


# -- enumeration -------------------------------------------------------------


def _offset_distances(n: int) -> np.ndarray:
    """Torus distance from the origin to every site, flattened with index ``x * n + y``."""
    r = np.arange(n)
    r = np.minimum(r, n - r)
    return np.sqrt(r[:, None] ** 2 + r[None, :] ** 2).ravel()


def _sub_index(n: int, k: np.ndarray, site: int) -> np.ndarray:
    """Flat index of ``k - site`` on the torus."""
    kx, ky = np.divmod(k, n)
    sx, sy = divmod(site, n)
    return ((kx - sx) % n) * n + (ky - sy) % n


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def spend(self, amount, partial):
        self.used += amount
        if self.used > self.limit:
            raise ResourceError(f"enumeration budget of {self.limit} site checks exceeded", partial=partial)


def enumerate_class_count(c, n: int | None = None, budget: int = DEFAULT_BUDGET) -> int:
    """Exact number of ordered tuples of ``Z^2_n`` in the class.

    ``x_1`` is pinned at the origin and the result multiplied by ``n^2``
    (every class is translation invariant). Later points are placed one at
    a time; each placement filters all ``n^2`` sites against the bounds to
    the points already placed, and the last placement is only counted.
    On exceeding ``budget`` site checks a ``ResourceError`` is raised whose
    ``partial`` is a lower bound on the count.
    """
    c = c.config_class()
    n = c.n if n is None else n
    if n != c.n:
        raise ConfigError("class scale and n disagree")
    j = c.j
    if j == 1:
        return n * n
    d0 = _offset_distances(n)
    allk = np.arange(n * n)
    ok = [[_within(d0, c.lower[a, b], c.upper[a, b]) for b in range(j)] for a in range(j)]
    budget = _Budget(budget)
    total = 0

    def place(k, placed, cand):
        nonlocal total
        # cand: sites admissible for x_k given every earlier point
        if k == j - 1:
            total += len(cand)
            return
        budget.spend(len(cand) * n * n, total * n * n)
        for site in cand:
            nxt = np.flatnonzero(ok[k][k + 1][_sub_index(n, allk, site)])
            for p, s in enumerate(placed):
                if len(nxt) == 0:
                    break
                nxt = nxt[ok[p][k + 1][_sub_index(n, nxt, s)]]
            place(k + 1, placed + [site], nxt)

    first = np.flatnonzero(ok[0][1])  # x_2 relative to x_1 = origin
    place(1, [0], first)
    return total * n * n


def class_count_exponent(c, n: int | None = None, budget: int = DEFAULT_BUDGET) -> float:
    """``log_n`` of the class size (``-inf`` for an empty class)."""
    c = c.config_class()
    count = enumerate_class_count(c, n, budget)
    return math.log(count) / math.log(c.n) if count else -math.inf


# -- weighted sum ------------------------------------------------------------


class SumCheck(NamedTuple):
    lhs_exponent: float
    rho_hat: float
    total: float
    configurations: int


def base_class(j: int, n: int, beta: float, eta: float) -> ConfigClass:
    return ConfigClass.uniform(j, n, n**eta, n**beta)


def iter_base_class(j: int, n: int, beta: float, eta: float, budget: int = DEFAULT_BUDGET) -> Iterator[np.ndarray]:
    """Tuples of ``E[(n^eta), (n^beta)]`` with ``x_1`` at the origin, as ``(j, 2)`` arrays."""
    d0 = _offset_distances(n)
    good = _within(d0, n**eta, n**beta)
    near = np.flatnonzero(good)
    used = 0

    def grow(placed):
        nonlocal used
        if len(placed) == j:
            yield np.column_stack(np.divmod(np.array(placed), n))
            return
        cand = near
        for s in placed[1:]:
            cand = cand[good[_sub_index(n, cand, s)]]
        used += len(near) * len(placed)
        if used > budget:
            raise ResourceError(f"enumeration budget of {budget} site checks exceeded")
        for site in cand:
            yield from grow(placed + [int(site)])

    if j == 1:
        yield np.zeros((1, 2), dtype=np.int64)
        return
    yield from grow([0])


def weighted_sum_bound_check(n: int, alpha: float, beta: float, eta: float, delta: float, j: int,
                             refine: bool = False, budget: int = DEFAULT_BUDGET) -> SumCheck:
    """``log_n sum_{x in E[(n^eta), (n^beta)]} n^(-2 alpha h_delta(x))`` against ``rho_hat_j``.

    Exact at small ``n``; ``h_delta`` is memoized on the pairwise squared
    distances, which determine it.
    """
    p = ExponentParams(j, alpha, beta)
    memo: dict = {}
    total = 0.0
    count = 0
    for pts in iter_base_class(j, n, beta, eta, budget):
        key = tuple(torus_d2(pts[:, None, :], pts[None, :, :], n)[np.triu_indices(j, 1)].tolist())
        h = memo.get(key)
        if h is None:
            h = memo[key] = h_delta(pts, n, delta, beta, eta, refine)
        total += n ** (-2 * alpha * h)
        count += 1
    total *= n * n
    count *= n * n
    lhs = math.log(total) / math.log(n) if total > 0 else -math.inf
    return SumCheck(lhs, rho_hat(p), total, count)


# -- random configurations ---------------------------------------------------


def random_config(j: int, n: int, beta: float, eta: float, rng=None, max_tries: int = 10_000) -> np.ndarray:
    """Random tuple of ``E[(n^eta), (n^beta)]`` with multi-scale clustering.

    Each new point is placed around a uniformly chosen earlier point at a
    log-uniform radius in ``[n^eta, n^beta]``; tuples violating a bound
    are rejected and redrawn.
    """
    rng = np.random.default_rng(rng)
    lo, hi = math.log(n**eta), math.log(n**beta)
    for _ in range(max_tries):
        pts = [rng.integers(0, n, size=2)]
        for _k in range(1, j):
            base = pts[int(rng.integers(len(pts)))]
            r = math.exp(rng.uniform(lo, hi))
            th = rng.uniform(0, 2 * math.pi)
            pts.append(np.rint(base + r * np.array([math.cos(th), math.sin(th)])).astype(np.int64) % n)
        pts = np.array(pts, dtype=np.int64)
        if j == 1 or in_class(pts, base_class(j, n, beta, eta)):
            return pts
    raise DomainError(f"no configuration accepted after {max_tries} tries")


def realize_config(A, n: int) -> np.ndarray:
    """Lattice points whose distance profile follows ``A`` at scale ``n``.

    The children of a decomposition node with separation ``s`` are laid out
    ``n^(1 - s)`` apart, alternating between the two axes with depth, and
    the result is centred on the origin. Distances match ``n^(1 - a)`` up to
    a factor depending only on ``j``.
    """
    A = as_ultra(A)
    pos = np.zeros((A.dim, 2))

    def place(node, origin, depth):
        if isinstance(node, Leaf):
            pos[node.index] = origin
            return
        step = n ** (1 - node.separation)
        axis = np.array([1.0, 0.0]) if depth % 2 == 0 else np.array([0.0, 1.0])
        for k, child in enumerate(node.children):
            place(child, origin + k * step * axis, depth + 1)

    place(maximal_decompose(A), np.zeros(2), 0)
    pts = np.rint(pos - pos.mean(axis=0)).astype(np.int64)
    if len({tuple(p) for p in pts.tolist()}) < A.dim:
        raise ScaleError(f"n={n} too small to separate the points of A")
    return pts
