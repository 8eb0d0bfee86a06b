"""Late points of covering walks, clustered tuple counts and exponent fits.

A site ``x`` is alpha-late when ``T_x >= (4 alpha / pi) (n ln n)^2`` (natural
log). Tuples are ordered; ``count`` allows repeated points, while
``count_distinct`` requires the ``j`` points to be different.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numba
import numpy as np

from .errors import DomainError, IncompleteTraceError, ResourceError
from .exponents import ExponentParams, rho_hat
from .lattice_walk import WalkTrace, iter_cover_replicas, torus_d2

NAIVE_LIMIT = 5_000_000


def late_threshold(n: int, alpha: float) -> float:
    return 4 * alpha / math.pi * (n * math.log(n)) ** 2


@dataclass(frozen=True, eq=False)
class LateSet:
    n: int
    alpha: float
    sites: np.ndarray  # (k, 2) int64, lexicographic order

    @property
    def threshold(self) -> float:
        return late_threshold(self.n, self.alpha)

    def __len__(self):
        return len(self.sites)

    def as_set(self) -> set:
        return {tuple(s) for s in self.sites.tolist()}


def late_set(trace: WalkTrace, alpha: float) -> LateSet:
    if not trace.complete:
        raise IncompleteTraceError("late sets need a completed cover run")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    sites = np.argwhere(trace.first_hit >= late_threshold(trace.n, alpha)).astype(np.int64)
    return LateSet(trace.n, alpha, sites)


# -- tuple counting ----------------------------------------------------------


class TupleCountResult(NamedTuple):
    j: int
    beta: float
    count: int
    count_distinct: int
    method: str


def _radius2(n, beta):
    # d^2 is an integer, so a relative slack only absorbs rounding in n**(2 beta)
    return n ** (2 * beta) * (1 + 1e-12)


@numba.njit(cache=True)
def _forward_csr(xs, ys, cell_of, order, cell_start, m, n, r2):
    """CSR of neighbours ``b > a`` with torus ``d^2 <= r2``; cells are ``m x m`` and at least ``r`` wide."""
    k = len(xs)
    indptr = np.zeros(k + 1, dtype=np.int64)
    cap = 1024
    dst = np.empty(cap, dtype=np.int64)
    cnt = 0
    seen = np.empty(9, dtype=np.int64)
    for a in range(k):
        cx = cell_of[a] // m
        cy = cell_of[a] % m
        nseen = 0
        for dx in range(-1, 2):
            for dy in range(-1, 2):
                c = ((cx + dx) % m) * m + (cy + dy) % m
                dup = False
                for s in range(nseen):
                    if seen[s] == c:
                        dup = True
                if dup:
                    continue
                seen[nseen] = c
                nseen += 1
                for p in range(cell_start[c], cell_start[c + 1]):
                    b = order[p]
                    if b <= a:
                        continue
                    ddx = abs(xs[a] - xs[b]) % n
                    ddy = abs(ys[a] - ys[b]) % n
                    ddx = min(ddx, n - ddx)
                    ddy = min(ddy, n - ddy)
                    if ddx * ddx + ddy * ddy <= r2:
                        if cnt == cap:
                            cap *= 2
                            grown = np.empty(cap, dtype=np.int64)
                            grown[:cnt] = dst[:cnt]
                            dst = grown
                        dst[cnt] = b
                        cnt += 1
        dst[indptr[a]:cnt].sort()
        indptr[a + 1] = cnt
    return indptr, dst[:cnt]


def forward_graph(sites: np.ndarray, n: int, beta: float):
    """CSR ``(indptr, indices)`` of neighbours ``b > a`` within ``n^beta``, indices sorted."""
    k = len(sites)
    r = n**beta
    m = max(1, int(n // math.ceil(r)))
    if k == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    xs = np.ascontiguousarray(sites[:, 0], dtype=np.int64)
    ys = np.ascontiguousarray(sites[:, 1], dtype=np.int64)
    # cell index floor(x m / n) keeps cell widths >= n / m >= r
    cell_of = (xs * m // n) * m + ys * m // n
    order = np.argsort(cell_of, kind="stable").astype(np.int64)
    cell_start = np.searchsorted(cell_of[order], np.arange(m * m + 1)).astype(np.int64)
    return _forward_csr(xs, ys, cell_of, order, cell_start, m, n, _radius2(n, beta))


@numba.njit(cache=True)
def _clique_counts(indptr, indices, j):
    """``out[s]`` = number of ``s``-cliques for ``s = 1..j``."""
    k = len(indptr) - 1
    out = np.zeros(j + 1, dtype=np.int64)
    out[1] = k
    if j == 1:
        return out
    maxdeg = 0
    for v in range(k):
        maxdeg = max(maxdeg, indptr[v + 1] - indptr[v])
    buf = np.empty((j, maxdeg + 1), dtype=np.int64)
    length = np.zeros(j, dtype=np.int64)
    ptr = np.zeros(j, dtype=np.int64)
    for v in range(k):
        deg = indptr[v + 1] - indptr[v]
        out[2] += deg
        if j == 2 or deg == 0:
            continue
        buf[0, :deg] = indices[indptr[v]:indptr[v + 1]]
        length[0] = deg
        ptr[0] = 0
        depth = 0
        # buf[d] holds the common forward neighbours of the current (d + 1)-clique
        while depth >= 0:
            if ptr[depth] >= length[depth]:
                depth -= 1
                continue
            u = buf[depth, ptr[depth]]
            ptr[depth] += 1
            nd = depth + 1
            p, q = ptr[depth], indptr[u]
            qe = indptr[u + 1]
            cnt = 0
            while p < length[depth] and q < qe:
                a = buf[depth, p]
                b = indices[q]
                if a == b:
                    buf[nd, cnt] = a
                    cnt += 1
                    p += 1
                    q += 1
                elif a < b:
                    p += 1
                else:
                    q += 1
            length[nd] = cnt
            out[nd + 2] += cnt
            if nd + 2 < j and cnt > 0:
                ptr[nd] = 0
                depth = nd
    return out


def _stirling2(j: int, k: int) -> int:
    return sum((-1) ** i * math.comb(k, i) * (k - i) ** j for i in range(k + 1)) // math.factorial(k)


def tuples_from_cliques(cliques: Sequence[int], j: int) -> tuple[int, int]:
    """Ordered j-tuples (with repetition, distinct) from clique counts ``cliques[s]``."""
    total = sum(int(cliques[s]) * math.factorial(s) * _stirling2(j, s) for s in range(1, j + 1))
    return total, int(cliques[j]) * math.factorial(j)


def _check_j(j):
    if int(j) != j or j < 1:
        raise DomainError(f"j must be a positive integer, got {j}")


def count_tuples(ls: LateSet, j: int, beta: float) -> TupleCountResult:
    """Ordered j-tuples of late sites with all pairwise torus distances ``<= n^beta``.

    A tuple is a clique of the within-``n^beta`` graph with repeats allowed,
    so the count is ``sum_s c_s s! S(j, s)`` with ``c_s`` the number of
    ``s``-cliques (found by bucketed neighbour search and forward-neighbour
    intersection) and ``S`` the Stirling numbers of the second kind.
    """
    _check_j(j)
    indptr, indices = forward_graph(ls.sites, ls.n, beta)
    cliques = _clique_counts(indptr, indices, j)
    total, distinct = tuples_from_cliques(cliques, j)
    return TupleCountResult(j, beta, total, distinct, "bucketed")


def count_tuples_naive(ls: LateSet, j: int, beta: float, limit: int = NAIVE_LIMIT) -> TupleCountResult:
    """Reference count from the dense adjacency matrix.

    ``j <= 3`` uses closed matrix expressions; larger ``j`` loops over all
    ``|L|^j`` tuples and refuses beyond ``limit``.
    """
    _check_j(j)
    k = len(ls)
    if k == 0:
        return TupleCountResult(j, beta, 0, 0, "naive")
    d2 = torus_d2(ls.sites[:, None, :], ls.sites[None, :, :], ls.n)
    adj = (d2 <= _radius2(ls.n, beta)).astype(np.int64)
    off = adj.copy()
    np.fill_diagonal(off, 0)
    if j == 1:
        return TupleCountResult(1, beta, k, k, "naive")
    if j == 2:
        return TupleCountResult(2, beta, int(adj.sum()), int(off.sum()), "naive")
    if j == 3:
        # float products go through BLAS; every partial sum is below 2^53 for |L| < 2^17
        a, o = adj.astype(float), off.astype(float)
        total = int(round(float((a * (a @ a)).sum())))
        distinct = int(round(float((o * (o @ o)).sum())))
        return TupleCountResult(3, beta, total, distinct, "naive")
    if k**j > limit:
        raise ResourceError(f"naive count needs {k}^{j} tuples, above the limit {limit}")
    total = distinct = 0
    pairs = list(itertools.combinations(range(j), 2))
    for t in itertools.product(range(k), repeat=j):
        if all(adj[t[a], t[b]] for a, b in pairs):
            total += 1
            distinct += len(set(t)) == j
    return TupleCountResult(j, beta, total, distinct, "naive")


# -- experiments -------------------------------------------------------------


class Spec(NamedTuple):
    alpha: float
    beta: float
    j: int


class ExperimentRow(NamedTuple):
    n: int
    replica: int
    alpha: float
    beta: float
    j: int
    late_count: int
    tuple_count: int
    tuple_count_distinct: int
    seed: int


CSV_HEADER = ("n", "replica", "late_count", "tuple_count_j", "tuple_count_j_distinct", "seed")


def run_experiment(specs: Iterable[Spec], n_grid: Sequence[int], replicas: int, seed: int,
                   threads: int = 1) -> Iterator[ExperimentRow]:
    """One covering run per ``(n, replica)``, shared by every ``Spec``.

    Rows come out ordered by ``n``, then replica, then ``Spec``, whatever the
    thread count.
    """
    specs = [Spec(float(a), float(b), int(j)) for a, b, j in specs]
    for s in specs:
        _check_j(s.j)
        if not 0 < s.alpha:
            raise DomainError("alpha must be positive")
        if not 0 < s.beta < 1:
            raise DomainError("beta must lie in (0, 1)")
    if replicas < 1:
        raise DomainError("need at least one replica")
    for n in n_grid:
        for r, trace in enumerate(iter_cover_replicas(n, replicas, seed, threads)):
            if not trace.complete:
                raise IncompleteTraceError(f"replica {r} at n={n} hit the step cap")
            for s in specs:
                ls = late_set(trace, s.alpha)
                res = count_tuples(ls, s.j, s.beta)
                yield ExperimentRow(n, r, s.alpha, s.beta, s.j, len(ls), res.count, res.count_distinct, seed)


def csv_rows(rows: Iterable[ExperimentRow]) -> Iterator[tuple]:
    for row in rows:
        yield row.n, row.replica, row.late_count, row.tuple_count, row.tuple_count_distinct, row.seed


class TableRow(NamedTuple):
    n: int
    mean: float
    stderr: float  # standard error of the mean count
    zero_replicas: int
    censored: bool  # mean count is zero, so the row carries no slope information


class ExponentEstimate(NamedTuple):
    slope: float
    stderr: float
    table: list
    rho_hat: float


def fit_exponent(counts_by_n: dict, j: int, alpha: float, beta: float) -> ExponentEstimate:
    """Least-squares slope of ``log mean count`` against ``log n``.

    The slope error propagates the per-n standard error of the mean through
    ``log`` (delta method). Rows with a zero mean are kept in the table as
    censored and left out of the fit.
    """
    table = []
    for n in sorted(counts_by_n):
        c = np.asarray(counts_by_n[n], dtype=float)
        mean = float(c.mean())
        se = float(c.std(ddof=1) / math.sqrt(len(c))) if len(c) > 1 else math.nan
        table.append(TableRow(int(n), mean, se, int((c == 0).sum()), mean == 0.0))
    used = [t for t in table if not t.censored]
    p = ExponentParams(j, alpha, beta)
    if len(used) < 2:
        return ExponentEstimate(math.nan, math.nan, table, rho_hat(p))
    x = np.log([t.n for t in used])
    y = np.log([t.mean for t in used])
    sig = np.array([t.stderr / t.mean for t in used])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / sxx)
    stderr = float(math.sqrt(np.sum((xc * sig) ** 2)) / sxx)
    return ExponentEstimate(slope, stderr, table, rho_hat(p))


def estimate_exponent(alpha: float, beta: float, j: int, n_grid: Sequence[int], replicas: int, seed: int,
                      threads: int = 1) -> ExponentEstimate:
    n_grid = list(n_grid)
    if len(n_grid) < 3 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n_grid must be ascending with at least 3 points")
    counts: dict = {n: [] for n in n_grid}
    for row in run_experiment([(alpha, beta, j)], n_grid, replicas, seed, threads):
        counts[row.n].append(row.tuple_count)
    return fit_exponent(counts, j, alpha, beta)


def estimate_exponents(specs: Sequence[Spec], n_grid: Sequence[int], replicas: int, seed: int,
                       threads: int = 1) -> dict:
    """``estimate_exponent`` for several specs on shared covering runs."""
    n_grid = list(n_grid)
    if len(n_grid) < 3 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n_grid must be ascending with at least 3 points")
    specs = [Spec(float(a), float(b), int(j)) for a, b, j in specs]
    counts = {s: {n: [] for n in n_grid} for s in specs}
    for row in run_experiment(specs, n_grid, replicas, seed, threads):
        counts[Spec(row.alpha, row.beta, row.j)][row.n].append(row.tuple_count)
    return {s: fit_exponent(counts[s], s.j, s.alpha, s.beta) for s in specs}
