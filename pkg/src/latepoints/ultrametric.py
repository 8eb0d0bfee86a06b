"""Algebra of the ultrametric matrix class M_j.

A member of M_j is a symmetric j x j matrix with unit diagonal, off-diagonal
entries in ``[0, 1 - eta]`` and the ultrametric triangle condition
``a[i, l] >= min(a[l, p], a[i, p])`` for distinct ``i, l, p``.

Indices are 0-based throughout (the JSON forms too).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ClassError, ConditioningError, DimensionError, DomainError, PlacementError

log = logging.getLogger(__name__)

DEFAULT_ETA = 0.01
TOL_MEMBER = 1e-12
# reciprocal condition number below which a solve is refused
RCOND_MIN = 1e-13


def _as_matrix(M):
    arr = np.asarray(M)
    if arr.dtype == object:
        arr = np.array([[Fraction(v) for v in row] for row in arr], dtype=object)
    else:
        arr = arr.astype(float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _check_eta(eta):
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0, 1), got {eta}")


def _member_mask(stack, eta, tol=TOL_MEMBER):
    """Membership of every matrix in a ``(..., j, j)`` float stack."""
    j = stack.shape[-1]
    sym = np.all(np.abs(stack - np.swapaxes(stack, -1, -2)) <= tol, axis=(-1, -2))
    diag = np.all(np.abs(np.diagonal(stack, axis1=-2, axis2=-1) - 1.0) <= tol, axis=-1)
    off = ~np.eye(j, dtype=bool)
    vals = stack[..., off]
    bounds = np.all((vals >= -tol) & (vals <= 1.0 - eta + tol), axis=-1)
    if j < 3:
        return sym & diag & bounds
    a_il = stack[..., :, :, None]
    a_lp = stack[..., None, :, :]
    a_ip = stack[..., :, None, :]
    ok = a_il >= np.minimum(a_lp, a_ip) - tol
    i, l, p = np.indices((j, j, j))
    distinct = (i != l) & (l != p) & (i != p)
    ultra = np.all(ok | ~distinct, axis=(-1, -2, -3))
    return sym & diag & bounds & ultra


def _is_member_exact(M, eta):
    j = M.shape[0]
    limit = 1 - Fraction(eta)
    for i in range(j):
        if M[i, i] != 1:
            return False
        for l in range(j):
            if M[i, l] != M[l, i]:
                return False
            if i != l and not (0 <= M[i, l] <= limit):
                return False
    for i in range(j):
        for l in range(j):
            for p in range(j):
                if len({i, l, p}) == 3 and M[i, l] < min(M[l, p], M[i, p]):
                    return False
    return True


def is_member(M, eta: float = DEFAULT_ETA) -> bool:
    """True iff ``M`` belongs to M_j for the class parameter ``eta``.

    Float input is compared with tolerance ``TOL_MEMBER``; arrays of
    :class:`fractions.Fraction` are checked exactly.
    """
    _check_eta(eta)
    arr = _as_matrix(M)
    if arr.dtype == object:
        return _is_member_exact(arr, eta)
    return bool(_member_mask(arr, eta))


@dataclass(frozen=True, eq=False)
class UltraMatrix:
    """Validated, immutable member of M_j."""

    entries: np.ndarray
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        arr = _as_matrix(self.entries)
        if not is_member(arr, self.eta):
            raise ClassError("matrix is not a member of M_j (eta=%g)" % self.eta)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def exact(self) -> bool:
        return self.entries.dtype == object

    def permuted(self, perm) -> "UltraMatrix":
        perm = np.asarray(perm)
        return UltraMatrix(self.entries[np.ix_(perm, perm)], self.eta)

    def to_dict(self) -> dict:
        rows = [[float(v) for v in row] for row in self.entries]
        return {"dim": self.dim, "eta": self.eta, "entries": [v for row in rows for v in row]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "UltraMatrix":
        j = int(d["dim"])
        flat = list(d["entries"])
        if len(flat) != j * j:
            raise DimensionError(f"expected {j * j} entries, got {len(flat)}")
        return cls(np.array(flat, dtype=float).reshape(j, j), float(d.get("eta", DEFAULT_ETA)))

    @classmethod
    def from_json(cls, text: str) -> "UltraMatrix":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"UltraMatrix(dim={self.dim}, eta={self.eta}, entries={self.entries.tolist()})"


def as_ultra(A, eta: float = DEFAULT_ETA) -> UltraMatrix:
    return A if isinstance(A, UltraMatrix) else UltraMatrix(A, eta)


def equidistant(j: int, r, eta: float = DEFAULT_ETA) -> UltraMatrix:
    """The matrix A_r^(j): unit diagonal, every off-diagonal entry equal to ``r``."""
    if j < 1:
        raise DomainError("j must be positive")
    _check_eta(eta)
    if j > 1 and not (0 <= r <= 1 - eta + TOL_MEMBER):
        raise DomainError(f"r={r} outside [0, 1 - eta] with eta={eta}")
    if isinstance(r, Fraction):
        M = np.full((j, j), r, dtype=object)
        for i in range(j):
            M[i, i] = Fraction(1)
    else:
        M = np.full((j, j), float(r))
        np.fill_diagonal(M, 1.0)
    return UltraMatrix(M, eta)


# -- maximal decomposition -------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    index: int


@dataclass(frozen=True)
class Branch:
    children: tuple
    separation: float


DecompositionTree = Union[Leaf, Branch]


def leaves(tree: DecompositionTree) -> list[int]:
    if isinstance(tree, Leaf):
        return [tree.index]
    out = []
    for child in tree.children:
        out.extend(leaves(child))
    return out


def tree_to_dict(tree: DecompositionTree) -> dict:
    if isinstance(tree, Leaf):
        return {"leaf": tree.index}
    return {"separation": float(tree.separation), "children": [tree_to_dict(c) for c in tree.children]}


def tree_from_dict(d: dict) -> DecompositionTree:
    if "leaf" in d:
        return Leaf(int(d["leaf"]))
    return Branch(tuple(tree_from_dict(c) for c in d["children"]), float(d["separation"]))


def _decompose(M, idx, tol):
    if len(idx) == 1:
        return Leaf(int(idx[0]))
    sub = M[np.ix_(idx, idx)]
    off = ~np.eye(len(idx), dtype=bool)
    s = sub[off].min()
    linked = (sub > s + tol) & off
    m, labels = connected_components(csr_matrix(linked), directed=False)
    if m == 1:
        # only reachable for non-members
        raise ClassError("relation a > s does not split the index set")
    children = tuple(_decompose(M, idx[labels == k], tol) for k in range(m))
    return Branch(children, float(s))


def maximal_decompose(A) -> DecompositionTree:
    """Recursive maximal decomposition of a member of M_j.

    Children of a node are the classes of ``k ~ k'  iff  a[k, k'] > s`` with
    ``s`` the smallest off-diagonal entry of the block. Entries within
    ``TOL_MEMBER`` of ``s`` count as cross-block.
    """
    A = as_ultra(A)
    M = np.asarray(A.entries, dtype=float)
    tol = 0.0 if A.exact else TOL_MEMBER
    tree = _decompose(M, np.arange(A.dim), tol)
    if A.exact and isinstance(tree, Branch):
        tree = _exact_separations(tree, A.entries)
    return tree


def _exact_separations(tree, E):
    if isinstance(tree, Leaf):
        return tree
    a = leaves(tree.children[0])[0]
    b = leaves(tree.children[1])[0]
    return Branch(tuple(_exact_separations(c, E) for c in tree.children), E[a, b])


def tree_matrix(tree: DecompositionTree, j: int | None = None) -> np.ndarray:
    """Rebuild the matrix encoded by a decomposition tree."""
    idx = leaves(tree)
    j = len(idx) if j is None else j
    M = np.eye(j)

    def fill(node):
        if isinstance(node, Leaf):
            return
        groups = [leaves(c) for c in node.children]
        for a in range(len(groups)):
            for b in range(len(groups)):
                if a != b:
                    M[np.ix_(groups[a], groups[b])] = node.separation
        for c in node.children:
            fill(c)

    fill(tree)
    return M


def boxplus(blocks: Sequence, placements: Sequence[Sequence[int]], s: float, eta: float | None = None) -> UltraMatrix:
    """Compose blocks with separation level ``s``.

    ``placements[k]`` lists the global indices taken by the rows of
    ``blocks[k]``; together they must partition ``range(j)``. A single block
    is accepted and returned re-indexed (logged at debug level).
    """
    blocks = [as_ultra(b) for b in blocks]
    if len(blocks) != len(placements):
        raise PlacementError("need one placement per block")
    if not blocks:
        raise PlacementError("no blocks given")
    eta = blocks[0].eta if eta is None else eta
    maps = [np.asarray(p, dtype=int) for p in placements]
    for b, p in zip(blocks, maps):
        if len(p) != b.dim:
            raise PlacementError("placement length does not match block size")
        if len(set(p.tolist())) != len(p):
            raise PlacementError("placement is not injective")
    taken = np.concatenate(maps)
    j = len(taken)
    if sorted(taken.tolist()) != list(range(j)):
        raise PlacementError("placements overlap or do not cover 0..j-1")
    for b in blocks:
        if s > np.asarray(b.entries, dtype=float).min() + TOL_MEMBER:
            raise DomainError(f"s={s} exceeds the smallest entry of a block")
    if len(blocks) == 1:
        log.debug("boxplus with a single block returns that block")
    M = np.full((j, j), float(s))
    for b, p in zip(blocks, maps):
        M[np.ix_(p, p)] = np.asarray(b.entries, dtype=float)
    return UltraMatrix(M, eta)


def xi(A) -> float:
    """Tree functional: sum over the children plus ``(m - 1)(1 - s)`` per node."""
    return _xi(maximal_decompose(A))


def _xi(tree):
    if isinstance(tree, Leaf):
        return 0
    m = len(tree.children)
    return sum(_xi(c) for c in tree.children) + (m - 1) * (1 - tree.separation)


# -- chi ---------------------------------------------------------------------


class ChiSolve(NamedTuple):
    solution: np.ndarray
    chi: float


def _solve(M, b):
    try:
        c, low = scipy.linalg.cho_factor(M, check_finite=False)
        x = scipy.linalg.cho_solve((c, low), b, check_finite=False)
        rcond = (np.diag(c).min() / np.diag(c).max()) ** 2
    except np.linalg.LinAlgError:
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        d = np.abs(np.diag(lu))
        if d.min() == 0:
            raise ConditioningError("matrix is singular") from None
        rcond = d.min() / d.max()
        x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    if rcond < RCOND_MIN or not np.all(np.isfinite(x)):
        raise ConditioningError(f"matrix is numerically singular (rcond~{rcond:.2e})")
    return x


def chi(A) -> ChiSolve:
    """Solve ``A y = 1`` and return ``y`` with ``chi = sum(y)``."""
    A = as_ultra(A)
    if A.exact:
        y = _solve_fraction(A.entries, [Fraction(1)] * A.dim)
        return ChiSolve(np.array(y, dtype=object), sum(y))
    y = _solve(np.asarray(A.entries, dtype=float), np.ones(A.dim))
    return ChiSolve(y, float(y.sum()))


def matrix_chi(M) -> float:
    """Sum of all entries of ``M^{-1}`` for any regular square matrix."""
    M = _as_matrix(M).astype(float)
    lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.min() == 0 or d.min() / d.max() < RCOND_MIN:
        raise ConditioningError("matrix is numerically singular")
    return float(scipy.linalg.lu_solve((lu, piv), np.ones(len(M)), check_finite=False).sum())


def chi_batch(stack: np.ndarray) -> np.ndarray:
    """chi for a ``(N, j, j)`` stack of members, one LAPACK call."""
    y = np.linalg.solve(stack, np.ones(stack.shape[:-1] + (1,)))
    return y[..., 0].sum(axis=-1)


def _solve_fraction(M, b):
    j = len(b)
    aug = [[Fraction(M[i, k]) for k in range(j)] + [Fraction(b[i])] for i in range(j)]
    for col in range(j):
        pivot = next((r for r in range(col, j) if aug[r][col] != 0), None)
        if pivot is None:
            raise ConditioningError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for r in range(j):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] / aug[col][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][j] / aug[i][i] for i in range(j)]


def chi_merge(s, b, c):
    """chi of ``A1 boxplus_s A2`` from ``b = chi(A1)`` and ``c = chi(A2)``."""
    den = 1 - s * s * b * c
    if den <= 0:
        raise DomainError(f"1 - s^2 b c = {den} is not positive")
    return (b + c - 2 * s * b * c) / den


def chi_min(j: int, r: float, eta: float = DEFAULT_ETA) -> tuple[float, UltraMatrix]:
    """Minimum of chi over the level set ``xi = r`` and the equidistant minimiser."""
    if j < 2:
        raise DomainError("chi_min needs j >= 2")
    if not 0 <= r <= j - 1:
        raise DomainError(f"r={r} outside [0, j-1]")
    level = 1 - r / (j - 1)
    if level > 1 - eta + TOL_MEMBER:
        raise DomainError(f"minimiser level {level} exceeds 1 - eta = {1 - eta}; r infeasible")
    if r == j - 1:
        level = 0.0
    return j / (j - r), equidistant(j, level, eta)


class PerturbationReport(NamedTuple):
    max_change: float
    singular: int
    trials: int


def perturb_stability_check(A, delta: float, trials: int, rng=None) -> PerturbationReport:
    """Largest ``|chi(A) - chi(A~)|`` over random entrywise perturbations.

    Each perturbed matrix adds independent uniform noise in ``[-delta, delta]``
    to every entry (symmetry is not preserved). Singular draws are counted in
    ``singular`` and skipped.
    """
    A = as_ultra(A)
    rng = np.random.default_rng(rng)
    base = chi(A).chi
    M = np.asarray(A.entries, dtype=float)
    worst = 0.0
    singular = 0
    for _ in range(trials):
        noisy = M + rng.uniform(-delta, delta, size=M.shape)
        try:
            worst = max(worst, abs(matrix_chi(noisy) - base))
        except ConditioningError:
            singular += 1
    return PerturbationReport(worst, singular, trials)


# -- random members ----------------------------------------------------------


def _random_shape(idx, rng):
    if len(idx) == 1:
        return int(idx[0])
    idx = rng.permutation(idx)
    m = int(rng.integers(2, len(idx) + 1))
    cuts = np.sort(rng.choice(np.arange(1, len(idx)), size=m - 1, replace=False))
    return [_random_shape(part, rng) for part in np.split(idx, cuts)]


def _random_gaps(shape, rng, upper):
    """Assign each internal node a value below its parent's; returns a tree of (v, children)."""
    if isinstance(shape, int):
        return shape
    v = rng.uniform(0, upper) if upper > 0 else 0.0
    while v == 0.0 and upper > 0:
        v = rng.uniform(0, upper)
    return (v, [_random_gaps(c, rng, v) for c in shape])


def _gap_tree_matrix(node, j, to_level):
    M = np.eye(j)

    def fill(nd):
        if isinstance(nd, int):
            return [nd]
        v, children = nd
        groups = [fill(c) for c in children]
        s = to_level(v)
        for a in range(len(groups)):
            for b in range(len(groups)):
                if a != b:
                    M[np.ix_(groups[a], groups[b])] = s
        return [i for g in groups for i in g]

    fill(node)
    return M


def random_member_entries(j: int, rng, eta: float = DEFAULT_ETA, low: float = 0.0) -> np.ndarray:
    """Entries of a random member of M_j with every level in ``[low, 1 - eta]``."""
    if j == 1:
        return np.eye(1)
    rng = np.random.default_rng(rng)
    gaps = _random_gaps(_random_shape(np.arange(j), rng), rng, 1.0)
    hi = 1 - eta
    # gap v in (0, 1] maps to level low + (1 - v)(hi - low): deeper nodes sit higher
    return _gap_tree_matrix(gaps, j, lambda v: low + (1 - v) * (hi - low))


def random_member(j: int, rng=None, eta: float = DEFAULT_ETA, low: float = 0.0) -> UltraMatrix:
    return UltraMatrix(random_member_entries(j, rng, eta, low), eta)


def _serial_matrices(v: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Stack with ``M[p_i, p_l] = min(v[i:l])`` for ``i < l``: the serial form of an ultrametric."""
    size, g = v.shape
    j = g + 1
    M = np.ones((size, j, j))
    for i in range(j - 1):
        run = v[:, i].copy()
        M[:, i, i + 1] = run
        for l in range(i + 2, j):
            run = np.minimum(run, v[:, l - 1])
            M[:, i, l] = run
    M = np.triu(M, 1) + np.transpose(np.triu(M, 1), (0, 2, 1)) + np.eye(j)
    rows = np.argsort(perm, axis=1)
    M = np.take_along_axis(M, rows[:, :, None], axis=1)
    return np.take_along_axis(M, rows[:, None, :], axis=2)


def level_set_batch(j: int, r: float, size: int, rng=None, eta: float = DEFAULT_ETA,
                    tie_prob: float = 0.3, max_rounds: int = 1000) -> np.ndarray:
    """``(size, j, j)`` stack of random members with ``xi = r``.

    Every member has a serial form: a leaf order and ``j - 1`` gap levels
    ``v_k`` with ``a[p_i, p_l] = min(v_i, ..., v_{l-1})``. Each gap is one
    merge of the decomposition tree, so ``xi = sum_k (1 - v_k)`` and the
    level set is ``{v in [0, 1 - eta]^(j-1): sum v = j - 1 - r}``. With
    probability ``tie_prob`` a gap shares the value of a random earlier gap,
    which gives multi-way nodes of every shape; the distinct values are
    uniform on the constrained simplex (rejection), and the leaf order is a
    uniform permutation.
    """
    if j < 2:
        raise DomainError("level sets are only non-trivial for j >= 2")
    lo = (j - 1) * eta
    if not lo - TOL_MEMBER <= r <= j - 1 + TOL_MEMBER:
        raise DomainError(f"r={r} outside [(j-1) eta, j-1] = [{lo}, {j - 1}]")
    rng = np.random.default_rng(rng)
    g = j - 1
    cap = 1 - eta
    # sample whichever of v or its slack cap - v has the smaller total
    total_v = g - r
    total_w = r - lo
    flip = total_w < total_v
    total = max(min(total_v, total_w), 0.0)
    out = np.empty((0, g))
    for _ in range(max_rounds):
        need = size - len(out)
        if need <= 0:
            break
        batch = max(2 * need, 64)
        # a tied gap copies the value (group) of a uniformly chosen earlier gap
        tied = rng.random((batch, g)) < tie_prob
        tied[:, 0] = False
        group = np.zeros((batch, g), dtype=np.int64)
        fresh = np.ones(batch, dtype=np.int64)
        for k in range(1, g):
            src = rng.integers(0, k, size=batch)
            group[:, k] = np.where(tied[:, k], group[np.arange(batch), src], fresh)
            fresh += ~tied[:, k]
        starts = ~tied
        rows, cols = np.nonzero(starts)
        # group k gets total * D_k / m_k with D ~ Dirichlet(1) over the groups
        share = np.zeros((batch, g))
        share[rows, group[rows, cols]] = rng.exponential(size=len(rows))
        share /= share.sum(axis=1, keepdims=True)
        sizes = np.zeros((batch, g))
        np.add.at(sizes, (np.repeat(np.arange(batch), g), group.ravel()), 1.0)
        vals = total * np.take_along_axis(share / np.maximum(sizes, 1.0), group, axis=1)
        ok = np.all(vals <= cap + TOL_MEMBER, axis=1)
        vals = np.minimum(vals[ok], cap)
        out = np.concatenate([out, vals])
    if len(out) < size:
        raise DomainError(f"level-set sampler accepted too few draws (j={j}, r={r})")
    v = out[:size]
    if flip:
        v = cap - v
    perm = np.argsort(rng.random((size, j)), axis=1)
    return _serial_matrices(v, perm)


def level_set_entries(j: int, r: float, rng=None, eta: float = DEFAULT_ETA) -> np.ndarray:
    """Entries of one random member with ``xi = r``; see ``level_set_batch``."""
    return level_set_batch(j, r, 1, rng, eta)[0]


def sample_level_set(j: int, r: float, rng=None, eta: float = DEFAULT_ETA) -> UltraMatrix:
    return UltraMatrix(level_set_entries(j, r, rng, eta), eta)


# -- property scans ----------------------------------------------------------


class ScanResult(NamedTuple):
    violations: int
    worst: float  # largest violation magnitude seen, 0 when none
    instances: int


def merge_monotonicity_scan(trials: int, rng=None, j_max: int = 4, eta: float = DEFAULT_ETA) -> ScanResult:
    """Check that merging blocks with larger chi gives a larger merged chi.

    Each instance draws ``s`` and two pairs of members with all levels at
    least ``s``; within a pair the larger-chi member plays ``A_k`` and the
    other ``Abar_k``. The merged values come from ``boxplus`` and ``chi``.
    """
    rng = np.random.default_rng(rng)
    bad, worst = 0, 0.0
    for _ in range(trials):
        s = rng.uniform(0, 0.9 * (1 - eta))
        j1, j2 = (int(v) for v in rng.integers(1, j_max, size=2))
        pairs = []
        for jk in (j1, j2):
            a, b = random_member(jk, rng, eta, low=s), random_member(jk, rng, eta, low=s)
            pairs.append((a, b) if chi(a).chi >= chi(b).chi else (b, a))
        place = [list(range(j1)), list(range(j1, j1 + j2))]
        big = chi(boxplus([pairs[0][0], pairs[1][0]], place, s, eta)).chi
        small = chi(boxplus([pairs[0][1], pairs[1][1]], place, s, eta)).chi
        drop = max(small - big, 0.0)
        if drop > 1e-12:
            bad += 1
        worst = max(worst, drop)
    return ScanResult(bad, worst, trials)


def r3_curve(g: int, h: int, gamma2: float, q: float, points: int = 100, eta: float = DEFAULT_ETA):
    """``f(gamma) = chi(A^(g)_gamma2 boxplus_gamma A^(h)_gamma1)`` along a level set of xi.

    With ``gamma2`` and ``q = (h - 1) gamma1 + gamma + 1`` held fixed, xi is
    constant and ``gamma1 = (q - 1 - gamma) / (h - 1)`` moves with ``gamma``.
    The grid covers every ``gamma`` with ``0 <= gamma <= gamma1 <= gamma2``.
    Returns ``(gammas, f)``.
    """
    if h < 2:
        raise DomainError("the level-set curve needs h >= 2 (h = 1 pins gamma)")
    hi = (q - 1) / h
    lo = max(0.0, q - 1 - (h - 1) * gamma2)
    if lo > hi + TOL_MEMBER:
        raise DomainError("empty feasible range")
    gammas = np.linspace(lo, hi, points)
    gamma1 = np.clip((q - 1 - gammas) / (h - 1), gammas, gamma2)
    j = g + h
    stack = np.empty((points, j, j))
    stack[:] = np.asarray(equidistant(g + h, 0.0, eta).entries)
    stack[:, :g, :g] = np.asarray(equidistant(g, gamma2, eta).entries)
    stack[:, g:, g:] = gamma1[:, None, None]
    stack[:, :g, g:] = gammas[:, None, None]
    stack[:, g:, :g] = gammas[:, None, None]
    idx = np.arange(j)
    stack[:, idx, idx] = 1.0
    f = chi_batch(stack)
    return gammas, f


def r3_scan(trials: int, rng=None, j_max: int = 6, points: int = 100, eta: float = DEFAULT_ETA) -> ScanResult:
    """Count random level-set curves on which ``f`` ever increases by more than 1e-12."""
    rng = np.random.default_rng(rng)
    bad, worst = 0, 0.0
    for _ in range(trials):
        h = int(rng.integers(2, j_max))
        g = int(rng.integers(1, j_max - h + 1))
        gamma2 = rng.uniform(0, 1 - eta)
        gamma1 = rng.uniform(0, gamma2)
        gamma = rng.uniform(0, gamma1)
        _, f = r3_curve(g, h, gamma2, (h - 1) * gamma1 + gamma + 1, points, eta)
        rise = max(float(np.diff(f).max()), 0.0)
        if rise > 1e-12:
            bad += 1
        worst = max(worst, rise)
    return ScanResult(bad, worst, trials)
