"""Acceptance criteria as executable checks.

Each check returns a ``CriterionResult``; ``run_all`` runs a selection and
``quick=True`` shrinks sample sizes (not tolerances) for a fast smoke run.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from typing import Callable, NamedTuple

import numpy as np

from . import config_geometry as cg
from . import exponents as ex
from . import hitting_kernel as hk
from . import lattice_walk as lw
from . import late_sim as ls
from . import ultrametric as um

SEED = 20_261_016


class CriterionResult(NamedTuple):
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return passed, detail, time.perf_counter() - t0


# -- 1 ---------------------------------------------------------------------


def equidistant_closed_form(quick: bool = False):
    worst = 0.0
    t0 = time.perf_counter()
    for j in range(2, 11):
        for r in np.linspace(0, 1 - um.DEFAULT_ETA, 20):
            worst = max(worst, abs(um.chi(um.equidistant(j, r)).chi - j / (1 + (j - 1) * r)))
    dt = time.perf_counter() - t0
    return worst < 1e-10 and dt < 1.0, f"max error {worst:.2e} (< 1e-10), {dt:.2f}s (< 1 s)"


# -- 2 ---------------------------------------------------------------------


def merge_recursion(quick: bool = False):
    rng = np.random.default_rng(SEED)
    trials = 1000
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(trials):
        s = rng.uniform(0, 0.95)
        j1, j2 = (int(v) for v in rng.integers(1, 6, size=2))
        A1 = um.random_member(j1, rng, low=s)
        A2 = um.random_member(j2, rng, low=s)
        merged = um.boxplus([A1, A2], [list(range(j1)), list(range(j1, j1 + j2))], s)
        g = um.chi_merge(s, um.chi(A1).chi, um.chi(A2).chi)
        worst = max(worst, abs(um.chi(merged).chi - g))
    dt = time.perf_counter() - t0
    return worst < 1e-9 and dt < 5.0, f"{trials} pairs, max error {worst:.2e} (< 1e-9), {dt:.2f}s (< 5 s)"


# -- 3 ---------------------------------------------------------------------


def level_set_optimality(quick: bool = False):
    rng = np.random.default_rng(SEED)
    samples = 1000 if quick else 10_000
    gap = math.inf
    attain = 0.0
    t0 = time.perf_counter()
    for j in range(2, 7):
        lo = (j - 1) * um.DEFAULT_ETA
        for r in np.linspace(lo, j - 1, 6):
            target = j / (j - r) if r < j - 1 else float(j)
            stack = um.level_set_batch(j, r, samples, rng)
            gap = min(gap, float(um.chi_batch(stack).min()) - target)
            value, minimiser = um.chi_min(j, r)
            attain = max(attain, abs(um.chi(minimiser).chi - value), abs(value - target),
                         abs(um.xi(minimiser) - r))
    dt = time.perf_counter() - t0
    ok = gap >= -1e-9 and attain < 1e-9 and dt < 60.0
    return ok, (f"{samples} samples per (j, r), min(chi - j/(j-r)) = {gap:.2e} (>= -1e-9), "
                f"minimiser error {attain:.1e}, {dt:.1f}s (< 60 s)")


# -- 4 ---------------------------------------------------------------------


def merge_scans(quick: bool = False):
    merge = um.merge_monotonicity_scan(1000, SEED)
    r3 = um.r3_scan(1000, SEED + 1)
    ok = merge.violations == 0 and r3.violations == 0
    return ok, (f"merge monotonicity {merge.violations}/{merge.instances} violations, "
                f"level-set curve {r3.violations}/{r3.instances} violations")


# -- 5 ---------------------------------------------------------------------


def hitting_identities(quick: bool = False):
    rng = np.random.default_rng(SEED)
    configs = 50
    inv = cof = last = 0.0
    t0 = time.perf_counter()
    for k in range(configs):
        n = (12, 16, 24)[k % 3]
        j = 1 + k % 3
        cfg = hk.random_torus_config(n, j, rng)
        dom = lw.Torus(n)
        Q, U = hk.build_q(cfg, dom), hk.build_u(cfg, dom)
        inv = max(inv, hk.verify_inverse_identity(Q, U))
        rep = hk.hit_report(cfg, dom)
        cof = max(cof, float(np.abs(rep.formula - rep.oracle).max()))
        last = max(last, hk.last_exit_decomposition_check(cfg, dom))
    dt = time.perf_counter() - t0
    ok = max(inv, cof, last) < 1e-9 and dt < 120
    return ok, (f"{configs} configs: inverse {inv:.1e}, cofactor {cof:.1e}, last exit {last:.1e} "
                f"(< 1e-9), {dt:.1f}s (< 2 min)")


# -- 6 ---------------------------------------------------------------------


def green_asymptotics(quick: bool = False):
    rows = []
    ok = True
    for n in (32, 64, 128, 256):
        g = lw.green_exact(n, (0, 0), (0, 0))
        c = g - 2 / math.pi * math.log(n)
        esc = abs(1 / g - lw.escape_probability_absorption(n))
        ok &= 0.8 < c < 1.2 and esc < 1e-10
        rows.append(f"n={n}: {c:.4f}/{esc:.0e}")
    return ok, "G - (2/pi) ln n / escape mismatch: " + ", ".join(rows)


# -- 7 ---------------------------------------------------------------------


def assignment_property(quick: bool = False):
    rng = np.random.default_rng(SEED)
    per = 200 if quick else 1000
    beta, eta = 0.5, 0.01
    fails = 0
    total = 0
    for j in range(1, 5):
        for n in (2**10, 2**14):
            delta = cg.min_delta(max(j, 2), n)
            for _ in range(per):
                x = cg.random_config(j, n, beta, eta, rng)
                A = cg.assign_matrix(x, n, delta, beta, eta)
                a = np.asarray(A.entries)
                ok = um.is_member(a, eta) and cg.in_class(x, cg.EHatClass(A, delta, n))
                ok &= bool(np.all(a[~np.eye(j, dtype=bool)] >= 1 - beta - 1e-12))
                fails += not ok
                total += 1
    return fails == 0, f"{fails} failures in {total} configurations (j <= 4, n in {{2^10, 2^14}})"


# -- 8 ---------------------------------------------------------------------

COUNT_DELTA = 0.04


def count_grid():
    two = [um.equidistant(2, a) for a in (0.1, 0.25, 0.4, 0.6, 0.9)]
    three = [um.equidistant(3, a) for a in (0.1, 0.3, 0.6, 0.9)]
    three += [um.UltraMatrix(np.array([[1, a, b], [a, 1, b], [b, b, 1]])) for a, b in ((0.8, 0.2), (0.5, 0.3))]
    return [um.equidistant(1, 0)] + two + three


def class_count_growth(quick: bool = False):
    worst = -math.inf
    bad = []
    for A in count_grid():
        bound = 2 * um.xi(A) + 2 + 0.5
        for n in (16, 32, 64):
            e = cg.class_count_exponent(cg.EHatClass(A, COUNT_DELTA, n))
            worst = max(worst, e - bound)
            if e > bound:
                bad.append(f"j={A.dim} a={np.asarray(A.entries)[0, 1:].round(2).tolist()} n={n}: {e:.2f}>{bound:.2f}")
    head = f"{len(bad)} exceedances, largest excess {worst:+.2f}"
    return not bad, head + ("; e.g. " + "; ".join(bad[:3]) if bad else "")


# -- 9 ---------------------------------------------------------------------


def exponent_properties(quick: bool = False):
    cont = 0.0
    for j in range(2, 7):
        for alpha in np.linspace(0.01, 0.99, 50):
            b = ex.crossover_beta(j, alpha)
            if 0 < b < 1:
                first, second = ex.rho_hat_branches(ex.ExponentParams(j, alpha, b))
                cont = max(cont, abs(first - second))
            bp = ex.crossover_beta_prob(j, alpha)
            if 0 < bp < 1:
                first, second = ex.rho_branches(ex.ExponentParams(j, alpha, bp))
                cont = max(cont, abs(first - second))
    grid = np.linspace(0.01, 0.99, 50)
    mono = float(ex.monotonicity_table(grid, grid, 6).min())
    j1 = max(abs(ex.rho_hat(ex.ExponentParams(1, a, b)) - (2 - 2 * a)) for a in grid for b in grid)
    ok = cont < 1e-12 and mono >= -1e-12 and j1 == 0.0
    return ok, f"continuity gap {cont:.1e}, min increment in j {mono:.3f}, |rho_hat_1 - (2 - 2a)| max {j1}"


# -- 10 --------------------------------------------------------------------

SLOPE_SPECS = {
    "j1": ls.Spec(0.3, 0.5, 1),
    "j2": ls.Spec(0.3, 0.5, 2),
    "a_hi": ls.Spec(0.5, 0.5, 2),
    "a_lo": ls.Spec(0.2, 0.5, 2),
    "b_lo": ls.Spec(0.3, 0.3, 2),
    "b_hi": ls.Spec(0.3, 0.7, 2),
}


def exponent_slopes(quick: bool = False, threads: int = 1):
    replicas = 40 if quick else 200
    t0 = time.perf_counter()
    est = ls.estimate_exponents(list(SLOPE_SPECS.values()), [64, 128, 256], replicas, SEED, threads)
    dt = time.perf_counter() - t0
    s = {k: est[v].slope for k, v in SLOPE_SPECS.items()}
    a = abs(s["j1"] - 1.4) <= 0.4
    b = abs(s["j2"] - 2.2) <= 0.6
    c = s["a_hi"] < s["a_lo"] and s["b_lo"] < s["b_hi"]
    limit = 1800 if threads <= 1 else 300
    ok = a and b and c and dt < limit
    return ok, (f"{replicas} replicas: (a) {s['j1']:.3f} vs 1.4 +- 0.4 {'ok' if a else 'no'}; "
                f"(b) {s['j2']:.3f} vs 2.2 +- 0.6 {'ok' if b else 'no'}; "
                f"(c) alpha 0.5/0.2: {s['a_hi']:.3f}/{s['a_lo']:.3f}, beta 0.3/0.7: "
                f"{s['b_lo']:.3f}/{s['b_hi']:.3f} {'ok' if c else 'no'}; {dt:.0f}s (< {limit} s)")


# -- 11 --------------------------------------------------------------------


def cover_time_direction(quick: bool = False, threads: int = 1):
    replicas = 100
    med = {}
    for n in (32, 64, 128):
        med[n] = float(np.median([t.normalized_cover_time for t in lw.iter_cover_replicas(n, replicas, SEED, threads)]))
    target = 4 / math.pi
    rises = med[128] > med[32]
    near = target / 2 <= med[128] <= 2 * target
    return rises and near, (f"medians {med[32]:.3f} (n=32), {med[64]:.3f} (n=64), {med[128]:.3f} (n=128); "
                            f"increase 32->128 {'yes' if rises else 'no'}; within factor 2 of 4/pi "
                            f"{'yes' if near else 'no'}")


# -- 12 --------------------------------------------------------------------


def simulate_determinism(quick: bool = False):
    from .cli import run

    args = ["simulate", "--alpha", "0.3", "--beta", "0.5", "--j", "2", "--n-grid", "16,24,32",
            "--replicas", "6", "--seed", "12345"]
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for k, threads in enumerate((1, 1, 2)):
            path = os.path.join(tmp, f"run{k}.csv")
            code = run(args + ["--threads", str(threads), "--out", path])
            if code != 0:
                return False, f"simulate exited with {code}"
            with open(path, "rb") as fh:
                outs.append(fh.read())
    same = outs[0] == outs[1] == outs[2]
    return same, f"3 runs (threads 1, 1, 2), {len(outs[0])} bytes each, identical: {same}"


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "equidistant chi closed form", equidistant_closed_form),
    (2, "merge recursion", merge_recursion),
    (3, "level-set optimality", level_set_optimality),
    (4, "merge and level-set scans", merge_scans),
    (5, "inverse identity and cofactor formula", hitting_identities),
    (6, "Green asymptotics and escape probability", green_asymptotics),
    (7, "matrix assignment property", assignment_property),
    (8, "class count growth", class_count_growth),
    (9, "exponent formula properties", exponent_properties),
    (10, "exponent slopes at desk scale", exponent_slopes),
    (11, "cover time direction", cover_time_direction),
    (12, "simulate determinism", simulate_determinism),
]


def run_criterion(number: int, quick: bool = False, threads: int = 1) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            kwargs = {"quick": quick}
            if fn in (exponent_slopes, cover_time_direction):
                kwargs["threads"] = threads
            passed, detail, dt = _timed(lambda: fn(**kwargs))
            return CriterionResult(num, name, bool(passed), detail, dt)
    raise KeyError(f"no criterion {number}")


def run_all(quick: bool = False, only=None, threads: int = 1, echo: Callable | None = None) -> list[CriterionResult]:
    results = []
    for num, _, _ in CRITERIA:
        if only and num not in only:
            continue
        res = run_criterion(num, quick, threads)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
