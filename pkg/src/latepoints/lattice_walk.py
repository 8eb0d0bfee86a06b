"""Simple random walk on Z^2 and on the torus Z^2_n.

Killed Green's functions and hitting probabilities are computed exactly by
sparse linear solves over a finite domain; covering runs on the torus use a
compiled stepping kernel fed by a seeded bit stream.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Optional

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, IncompleteTraceError

Site = tuple[int, int]

# unit moves, in the order the 2-bit direction codes refer to them
MOVES = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)])


def torus_d2(a, b, n: int):
    """Squared Euclidean distance on Z^2_n (minimum over translates)."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % n
    d = np.minimum(d, n - d)
    return (d**2).sum(axis=-1)


def torus_distance(a, b, n: int):
    return np.sqrt(torus_d2(a, b, n))


# -- finite domains ------------------------------------------------------------


class Torus:
    """All n^2 sites of Z^2_n; site ``(x, y)`` has index ``x * n + y``."""

    def __init__(self, n: int):
        if n < 2:
            raise DomainError("torus side must be at least 2")
        self.n = n
        self.size = n * n
        xs, ys = np.divmod(np.arange(self.size), n)
        self.sites = np.stack([xs, ys], axis=1)
        nb = [((xs + dx) % n) * n + (ys + dy) % n for dx, dy in MOVES]
        self.neighbors = np.stack(nb, axis=1)

    def contains(self, site) -> bool:
        return True

    def index(self, site) -> int:
        return int(site[0]) % self.n * self.n + int(site[1]) % self.n

    def __repr__(self):
        return f"Torus({self.n})"


class Disk:
    """Sites of Z^2 with ``|z| < radius``; steps out of the disk are killed (index -1)."""

    def __init__(self, radius: int):
        if radius < 1:
            raise DomainError("disk radius must be positive")
        self.radius = n = radius
        r = np.arange(-n, n + 1)
        X, Y = np.meshgrid(r, r, indexing="ij")
        inside = X**2 + Y**2 < n * n
        self.sites = np.stack([X[inside], Y[inside]], axis=1)
        self.size = len(self.sites)
        self._lookup = np.full(X.shape, -1, dtype=np.int64)
        self._lookup[inside] = np.arange(self.size)
        nb = []
        for dx, dy in MOVES:
            q = self.sites + (dx, dy)
            nb.append(self._lookup[q[:, 0] + n, q[:, 1] + n])  # |q| <= n so always in the grid
        self.neighbors = np.stack(nb, axis=1)

    def contains(self, site) -> bool:
        return site[0] ** 2 + site[1] ** 2 < self.radius**2

    def index(self, site) -> int:
        if not self.contains(site):
            raise DomainError(f"site {tuple(site)} outside D(0, {self.radius})")
        return int(self._lookup[site[0] + self.radius, site[1] + self.radius])

    def __repr__(self):
        return f"Disk({self.radius})"


def outer_boundary(center, radius: float, n: Optional[int] = None) -> list[Site]:
    """Sites outside ``D(center, radius)`` with a neighbour inside it.

    With ``n`` given, distances are taken on the torus and sites reduced mod n.
    """
    R = int(math.ceil(radius)) + 1
    cx, cy = center
    out = set()
    for dx in range(-R, R + 1):
        for dy in range(-R, R + 1):
            if dx * dx + dy * dy < radius * radius:
                continue
            for mx, my in MOVES:
                ex, ey = dx + mx, dy + my
                if ex * ex + ey * ey < radius * radius:
                    site = (cx + dx, cy + dy)
                    if n is not None:
                        site = (site[0] % n, site[1] % n)
                    out.add(site)
                    break
    if n is not None:
        inside = {((cx + dx) % n, (cy + dy) % n) for dx in range(-R, R + 1) for dy in range(-R, R + 1)
                  if dx * dx + dy * dy < radius * radius}
        if out & inside:
            raise DomainError("circle wraps around the torus; radius too large")
    return sorted(out)


def _operator(domain, unknown: np.ndarray):
    """``I - P`` restricted to the unknown sites, plus the position map."""
    pos = np.full(domain.size, -1, dtype=np.int64)
    pos[unknown] = np.arange(len(unknown))
    nb = domain.neighbors[unknown]
    rows, cols = [], []
    for k in range(4):
        tgt = nb[:, k]
        ok = tgt >= 0
        ok[ok] &= pos[tgt[ok]] >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(pos[tgt[ok]])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    m = len(unknown)
    P = sp.csr_matrix((np.full(len(rows), 0.25), (rows, cols)), shape=(m, m))
    return (sp.identity(m, format="csr") - P).tocsc(), pos


def absorb(domain, fixed_idx, fixed_val, exit_value: float = 0.0) -> np.ndarray:
    """Harmonic extension over ``domain`` with prescribed values.

    Returns ``h`` on every site: ``h`` equals ``fixed_val`` on ``fixed_idx``,
    every other site satisfies ``h(z) = mean of h over the 4 neighbours``,
    and steps that leave the domain contribute ``exit_value``. ``h(z)`` is
    then the expected value of the payoff at the walk's absorption.
    """
    fixed_idx = np.asarray(fixed_idx, dtype=np.int64)
    h = np.zeros(domain.size)
    mask = np.zeros(domain.size, dtype=bool)
    mask[fixed_idx] = True
    h[fixed_idx] = fixed_val
    unknown = np.nonzero(~mask)[0]
    if len(unknown) == 0:
        return h
    A, pos = _operator(domain, unknown)
    nb = domain.neighbors[unknown]
    rhs = np.zeros(len(unknown))
    for k in range(4):
        tgt = nb[:, k]
        out = tgt < 0
        rhs[out] += 0.25 * exit_value
        fx = ~out
        fx[fx] &= mask[tgt[fx]]
        rhs[fx] += 0.25 * h[tgt[fx]]
    h[unknown] = spla.spsolve(A, rhs)
    return h


def first_step(domain, h: np.ndarray, i: int, exit_value: float = 0.0) -> float:
    """``E^z[h(S_1)]`` for the site with index ``i``."""
    nb = domain.neighbors[i]
    return 0.25 * sum(h[t] if t >= 0 else exit_value for t in nb)


def green_columns(domain, killed_idx, targets) -> np.ndarray:
    """``G(., t)`` for each target index, for the walk killed on ``killed_idx``
    and on leaving the domain. Rows of killed sites are zero."""
    mask = np.zeros(domain.size, dtype=bool)
    mask[np.asarray(killed_idx, dtype=np.int64)] = True
    unknown = np.nonzero(~mask)[0]
    A, pos = _operator(domain, unknown)
    targets = list(targets)
    rhs = np.zeros((len(unknown), len(targets)))
    for c, t in enumerate(targets):
        if pos[t] < 0:
            raise DomainError("target site is killed")
        rhs[pos[t], c] = 1.0
    sol = spla.splu(A).solve(rhs)
    out = np.zeros((domain.size, len(targets)))
    out[unknown] = sol
    return out


# -- Green's functions of the disk ----------------------------------------------


@lru_cache(maxsize=8)
def _disk_factor(n: int):
    domain = Disk(n)
    A, _ = _operator(domain, np.arange(domain.size))
    return domain, spla.splu(A)


@lru_cache(maxsize=32)
def _disk_green_column(n: int, y: Site) -> np.ndarray:
    domain, lu = _disk_factor(n)
    e = np.zeros(domain.size)
    e[domain.index(y)] = 1.0
    g = lu.solve(e)
    g.flags.writeable = False
    return g


def _killed_site(n, site):
    """True for sites of the outer boundary of D(0, n); error further out."""
    if site[0] ** 2 + site[1] ** 2 < n * n:
        return False
    if any((site[0] + dx) ** 2 + (site[1] + dy) ** 2 < n * n for dx, dy in MOVES):
        return True
    raise DomainError(f"site {tuple(site)} outside D(0, {n}) and its boundary")


def green_exact(n: int, x: Site, y: Site) -> float:
    """Expected visits to ``y`` from ``x`` before leaving ``D(0, n)``.

    Boundary sites of the disk are already killed and give 0.
    """
    x, y = tuple(map(int, x)), tuple(map(int, y))
    if _killed_site(n, x) or _killed_site(n, y):
        return 0.0
    domain, _ = _disk_factor(n)
    return float(_disk_green_column(n, y)[domain.index(x)])


def green_matrix(n: int, points) -> np.ndarray:
    """``(G_n(x_i, x_l))`` for a list of sites in ``D(0, n)``."""
    pts = [tuple(map(int, p)) for p in points]
    return np.array([[green_exact(n, a, b) for b in pts] for a in pts])


def scaled_green_matrix(n: int, points) -> np.ndarray:
    """``pi G_n(x_i, x_l) / (2 log n)``: tends to an ultrametric profile."""
    return math.pi * green_matrix(n, points) / (2 * math.log(n))


def escape_probability(n: int) -> float:
    """``P(tau_n < T_0)`` as ``1 / G_n(0, 0)``."""
    if n < 2:
        raise DomainError("n must be at least 2")
    return 1.0 / green_exact(n, (0, 0), (0, 0))


def escape_probability_absorption(n: int) -> float:
    """``P(tau_n < T_0)`` by a separate solve: absorb at 0 (payoff 0) and on exit (payoff 1)."""
    domain = Disk(n)
    o = domain.index((0, 0))
    h = absorb(domain, [o], [0.0], exit_value=1.0)
    return first_step(domain, h, o, exit_value=1.0)


class HitEstimate(NamedTuple):
    exact: float
    asymptotic: float


@lru_cache(maxsize=8)
def _cached_disk(R: int) -> Disk:
    return Disk(R)


@lru_cache(maxsize=16)
def _hit_origin_field(R: int) -> np.ndarray:
    domain = _cached_disk(R)
    h = absorb(domain, [domain.index((0, 0))], [1.0], exit_value=0.0)
    h.flags.writeable = False
    return h


def hit_before_exit(x: Site, R: int) -> HitEstimate:
    """``P^x(T_0 < tau_R)`` exactly, with ``log(R/|x|)/log R`` for comparison."""
    norm = math.hypot(*x)
    if not 0 < norm < R:
        raise DomainError(f"need 0 < |x| < R, got |x|={norm}, R={R}")
    h = _hit_origin_field(R)
    return HitEstimate(float(h[_cached_disk(R).index(x)]), math.log(R / norm) / math.log(R))


@lru_cache(maxsize=16)
def _annulus_field(r: int, R: int) -> np.ndarray:
    domain = _cached_disk(R)
    d2 = (domain.sites**2).sum(axis=1)
    inner = d2 < r * r
    near = np.zeros(domain.size, dtype=bool)
    for dx, dy in MOVES:
        q = domain.sites + (dx, dy)
        near |= (q**2).sum(axis=1) < r * r
    fixed = np.nonzero(inner | near)[0]
    h = absorb(domain, fixed, 1.0, exit_value=0.0)
    h.flags.writeable = False
    return h


def annulus_hit(x: Site, r: int, R: int) -> HitEstimate:
    """``P^x(tau_r < tau_R)`` exactly, with ``log(R/|x|)/log(R/r)`` for comparison."""
    norm = math.hypot(*x)
    if not r < norm < R:
        raise DomainError(f"need r < |x| < R, got r={r}, |x|={norm}, R={R}")
    h = _annulus_field(r, R)
    return HitEstimate(float(h[_cached_disk(R).index(x)]), math.log(R / norm) / math.log(R / r))


# -- covering runs on the torus ---------------------------------------------------


@dataclass
class WalkTrace:
    """Summary of one torus walk.

    ``first_hit[x, y]`` is ``T_x`` (``-1`` if never visited; the start has
    0) and ``visit_count[x, y]`` is ``K(steps, x)``.
    """

    n: int
    start: Site
    steps: int
    first_hit: np.ndarray
    visit_count: np.ndarray
    complete: bool

    @property
    def cover_time(self) -> int:
        if not self.complete:
            raise IncompleteTraceError("walk stopped before covering the torus")
        return int(self.first_hit.max())

    @property
    def normalized_cover_time(self) -> float:
        return self.cover_time / (self.n * math.log(self.n)) ** 2


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Independent stream for ``(master seed, replica index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(replica),))))


def directions_from_words(words: np.ndarray) -> np.ndarray:
    """Unpack 64-bit words into 2-bit direction codes, low bits first."""
    words = np.asarray(words, dtype=np.uint64)
    shifts = np.arange(0, 64, 2, dtype=np.uint64)
    return ((words[:, None] >> shifts) & np.uint64(3)).astype(np.uint8).ravel()


@numba.njit(nogil=True, cache=True)
def _advance(n, x, y, t, first_hit, visits, remaining, words, cap):
    three = np.uint64(3)
    for w in words:
        for k in range(32):
            d = (w >> np.uint64(2 * k)) & three
            if d == 0:
                x = x + 1 if x + 1 < n else 0
            elif d == 1:
                x = x - 1 if x > 0 else n - 1
            elif d == 2:
                y = y + 1 if y + 1 < n else 0
            else:
                y = y - 1 if y > 0 else n - 1
            t += 1
            visits[x, y] += 1
            if first_hit[x, y] < 0:
                first_hit[x, y] = t
                remaining -= 1
                if remaining == 0:
                    return x, y, t, remaining
            if t >= cap:
                return x, y, t, remaining
    return x, y, t, remaining


WORDS_PER_CHUNK = 1 << 14


def step_cap(n: int) -> int:
    return int(1000 * (n * math.log(n)) ** 2)


def simulate_cover(n: int, rng_seed: int = 0, replica: int = 0, start: Site = (0, 0),
                   cap: Optional[int] = None) -> WalkTrace:
    """Run the 4-neighbour walk on Z^2_n until every site is visited.

    Stops early at ``cap`` steps (default ``1000 (n log n)^2``) and returns
    a trace with ``complete=False``.
    """
    if n < 2:
        raise DomainError("n must be at least 2")
    rng = replica_rng(rng_seed, replica)
    cap = step_cap(n) if cap is None else cap
    first_hit = np.full((n, n), -1, dtype=np.int64)
    visits = np.zeros((n, n), dtype=np.int64)
    x, y = start[0] % n, start[1] % n
    first_hit[x, y] = 0
    visits[x, y] = 1
    t, remaining = 0, n * n - 1
    while remaining > 0 and t < cap:
        words = rng.bit_generator.random_raw(WORDS_PER_CHUNK)
        x, y, t, remaining = _advance(n, x, y, t, first_hit, visits, remaining, words, cap)
    return WalkTrace(n, (start[0] % n, start[1] % n), int(t), first_hit, visits, remaining == 0)


def iter_cover_replicas(n: int, replicas: int, seed: int, threads: int = 1) -> Iterator[WalkTrace]:
    """Covering runs for replicas ``0 .. replicas-1``, yielded in order."""
    if threads <= 1:
        for r in range(replicas):
            yield simulate_cover(n, seed, r)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(lambda r: simulate_cover(n, seed, r), range(replicas))
