"""Command-line entry point: ``latepoints <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 failed acceptance criteria,
64 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import config_geometry as cg
from . import exponents as ex
from . import hitting_kernel as hk
from . import lattice_walk as lw
from . import late_sim as ls
from . import ultrametric as um
from .errors import DomainError, LatePointsError

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


# -- argument types ----------------------------------------------------------


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _site(text):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a site 'x,y', got {text!r}") from None
    return x, y


def _sites(text):
    return [_site(part) for part in text.split(";") if part.strip()]


def _json_arg(text):
    """Inline JSON, or ``@path`` to read it from a file."""
    try:
        if text.startswith("@"):
            with open(text[1:], encoding="utf-8") as fh:
                return json.load(fh)
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise argparse.ArgumentTypeError(f"cannot read JSON: {exc}") from None


# -- output ------------------------------------------------------------------


@contextlib.contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _emit_table(args, header, rows):
    rows = list(rows)
    with _sink(args.out) as fh:
        if args.format == "json":
            json.dump([dict(zip(header, r)) for r in rows], fh, indent=2, default=_jsonable)
            fh.write("\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def _emit_record(args, record: dict, text: str):
    with _sink(args.out) as fh:
        if args.format == "json":
            json.dump(record, fh, indent=2, default=_jsonable)
            fh.write("\n")
        elif args.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            flat = {k: v for k, v in record.items() if not isinstance(v, (list, dict))}
            w.writerow(flat.keys())
            w.writerow(flat.values())
        else:
            fh.write(text + "\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


# -- subcommands -------------------------------------------------------------


def cmd_exponent(args):
    p = ex.ExponentParams(args.j, args.alpha, args.beta)
    hat = ex.rho_hat_branch(p)
    prob = ex.rho_branch(p)
    record = {"j": p.j, "alpha": p.alpha, "beta": p.beta, "rho_hat": hat.value, "branch": hat.branch,
              "rho": prob.value, "rho_branch": prob.branch, "crossover_beta": ex.crossover_beta(p.j, p.alpha)}
    shown = hat if args.variant == "hat" else prob
    _emit_record(args, record, f"{shown.value:.15g} branch={shown.branch}")


def cmd_exponent_grid(args):
    rows = ex.exponent_grid(args.j_max, args.alpha_grid, args.beta_grid)
    _emit_table(args, ("j", "alpha", "beta", "rho_hat", "rho", "branch"), rows)


def cmd_chi(args):
    A = _matrix(args)
    res = um.chi(A)
    value = res.chi
    record = {"chi": value if not A.exact else str(value), "solution": [str(v) for v in res.solution] if A.exact
              else res.solution.tolist(), "xi": str(um.xi(A)) if A.exact else um.xi(A)}
    _emit_record(args, record, str(value) if A.exact else f"{value:.15g}")


def cmd_decompose(args):
    A = _matrix(args)
    tree = um.maximal_decompose(A)
    record = {"xi": um.xi(A) if not A.exact else str(um.xi(A)), "tree": um.tree_to_dict(tree)}
    text = json.dumps(record, default=str)
    _emit_record(args, record, text)


def _matrix(args):
    data = args.matrix
    if isinstance(data, dict):
        return um.UltraMatrix.from_dict(data)
    if args.exact:
        from fractions import Fraction

        data = np.array([[Fraction(str(v)) for v in row] for row in data], dtype=object)
    return um.UltraMatrix(data, args.eta)


def cmd_green(args):
    n = args.n
    g = lw.green_exact(n, args.x, args.y)
    record = {"n": n, "x": list(args.x), "y": list(args.y), "green": g,
              "green_origin_minus_log": lw.green_exact(n, (0, 0), (0, 0)) - 2 / math.pi * math.log(n),
              "escape": lw.escape_probability(n), "escape_absorption": lw.escape_probability_absorption(n)}
    _emit_record(args, record, f"{g:.15g}")


def cmd_cover(args):
    rows = []
    for r, tr in enumerate(lw.iter_cover_replicas(args.n, args.replicas, args.seed, args.threads)):
        rows.append((args.n, r, tr.cover_time if tr.complete else "", tr.normalized_cover_time if tr.complete else "",
                     int(tr.complete), args.seed))
    _emit_table(args, ("n", "replica", "cover_time", "normalized_cover_time", "complete", "seed"), rows)


def cmd_hitprob(args):
    dom = hk.parse_domain(args.domain)
    if args.kill is not None:
        kill = frozenset(args.kill)
    elif isinstance(dom, lw.Torus) and not args.no_kill:
        center, radius = _default_circle(args.points + [args.witness], dom.n)
        if args.kill_center is not None:
            center = args.kill_center
        if args.kill_radius is not None:
            radius = args.kill_radius
        try:
            kill = frozenset(lw.outer_boundary(center, radius, dom.n))
        except DomainError as exc:
            raise DomainError(f"{exc}; pass --kill, --kill-radius or --no-kill") from None
    else:
        kill = frozenset()
    cfg = hk.PointConfig(tuple(args.points), args.witness, kill)
    rep = hk.hit_report(cfg, dom, args.form)
    rows = []
    for u, (f, o) in enumerate(zip(rep.formula, rep.oracle)):
        rel = abs(f - o) / abs(o) if o != 0 else abs(f - o)
        rows.append((u, cfg.points[u][0], cfg.points[u][1], float(f), float(o), float(rel)))
    if args.format == "text":
        with _sink(args.out) as fh:
            for row in rows:
                fh.write(f"x{row[0]}=({row[1]},{row[2]}) formula={row[3]:.15g} oracle={row[4]:.15g} "
                         f"rel_error={row[5]:.3e}\n")
            fh.write(f"max rel_error={rep.rel_error:.3e}\n")
    else:
        _emit_table(args, ("index", "x", "y", "formula", "oracle", "rel_error"), rows)


def _default_circle(sites, n):
    """Circle around the sites' centroid that keeps every site strictly inside."""
    pts = np.asarray(sites, dtype=float)
    center = tuple(int(v) for v in np.rint(pts.mean(axis=0)))
    radius = float(lw.torus_distance(np.asarray(sites), np.asarray(center), n).max()) + 2
    return center, radius


def cmd_geometry(args):
    cfg = args.config
    if not isinstance(cfg, dict):
        raise LatePointsError("geometry --config must be a JSON object")
    if args.action == "assign":
        pts = np.asarray(cfg["points"], dtype=np.int64)
        n, delta, beta = int(cfg["n"]), float(cfg["delta"]), float(cfg["beta"])
        eta = float(cfg.get("eta", um.DEFAULT_ETA))
        A = cg.assign_matrix(pts, n, delta, beta, eta)
        h = cg.h_delta_detail(pts, n, delta, beta, eta, refine=bool(cfg.get("refine", False)))
        if args.format == "json":
            _emit_record(args, {"matrix": A.to_dict(), "chi": um.chi(A).chi, "h_delta": h.value}, "")
        else:
            _emit_table(args, [f"a{k}" for k in range(A.dim)], np.asarray(A.entries).tolist())
    elif args.action == "count":
        n_grid = cfg.get("n_grid", [cfg["n"]] if "n" in cfg else None)
        if not n_grid:
            raise LatePointsError("count needs 'n' or 'n_grid'")
        rows = []
        for n in n_grid:
            c = _class_from(cfg, int(n))
            count = cg.enumerate_class_count(c, budget=int(cfg.get("budget", cg.DEFAULT_BUDGET)))
            bound = ""
            if "A" in cfg:
                bound = 2 * um.xi(c.A) + 2 + 0.5
            rows.append((int(n), count, math.log(count) / math.log(n) if count else "", bound))
        _emit_table(args, ("n", "count", "log_n_count", "bound"), rows)
    else:
        n_grid = cfg.get("n_grid", [cfg["n"]] if "n" in cfg else None)
        if not n_grid:
            raise LatePointsError("sumcheck needs 'n' or 'n_grid'")
        rows = []
        for n in n_grid:
            delta = cfg.get("delta")
            delta = cg.min_delta(max(int(cfg["j"]), 2), int(n)) if delta is None else float(delta)
            res = cg.weighted_sum_bound_check(int(n), float(cfg["alpha"]), float(cfg["beta"]),
                                              float(cfg.get("eta", um.DEFAULT_ETA)), delta, int(cfg["j"]),
                                              refine=bool(cfg.get("refine", False)))
            rows.append((int(n), delta, res.lhs_exponent, res.rho_hat, res.configurations))
        _emit_table(args, ("n", "delta", "lhs_exponent", "rho_hat", "configurations"), rows)


def _class_from(cfg, n):
    if "A" in cfg:
        A = um.UltraMatrix(np.asarray(cfg["A"], dtype=float), float(cfg.get("eta", um.DEFAULT_ETA)))
        return cg.EHatClass(A, float(cfg["delta"]), n)
    return cg.ConfigClass(int(cfg["j"]), n, np.asarray(cfg["lower"], dtype=float), np.asarray(cfg["upper"], dtype=float))


def cmd_simulate(args):
    if len(args.n_grid) < 1:
        raise LatePointsError("--n-grid is empty")
    rows = ls.run_experiment([(args.alpha, args.beta, args.j)], args.n_grid, args.replicas, args.seed, args.threads)
    _emit_table(args, ls.CSV_HEADER, ls.csv_rows(rows))


def cmd_verify_all(args):
    from .verify import run_all

    results = run_all(quick=args.quick, only=args.only, threads=args.threads, echo=print)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump([r._asdict() for r in results], fh, indent=2)
    return EXIT_FAILED if failed else EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=1, help="worker threads for replicas")
    common.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("text", "csv", "json"), default=None)

    p = _Parser(prog="latepoints", description="Late points of the planar random walk cover: "
                "exponents, ultrametric matrices, killed Green kernels and Monte Carlo.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, default_format, **kw):
        sp = sub.add_parser(name, parents=[common], **kw)
        sp.set_defaults(func=fn, default_format=default_format)
        return sp

    sp = add("exponent", cmd_exponent, "text", help="rho_hat_j and rho_j at one point")
    sp.add_argument("--j", type=_positive_int, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--variant", choices=("hat", "prob"), default="hat", help="expected-count or in-probability exponent")

    sp = add("exponent-grid", cmd_exponent_grid, "csv", help="exponents over a parameter grid")
    sp.add_argument("--j-max", type=_positive_int, required=True)
    sp.add_argument("--alpha-grid", type=_float_list, required=True)
    sp.add_argument("--beta-grid", type=_float_list, required=True)

    for name, fn, helptext in (("chi", cmd_chi, "chi of a member of M_j"),
                               ("decompose", cmd_decompose, "maximal decomposition tree and xi")):
        sp = add(name, fn, "text", help=helptext)
        sp.add_argument("--matrix", type=_json_arg, required=True, help="JSON rows, or @file")
        sp.add_argument("--eta", type=float, default=um.DEFAULT_ETA)
        sp.add_argument("--exact", action="store_true", help="rational arithmetic")

    sp = add("green", cmd_green, "text", help="Green's function of the walk killed outside D(0, n)")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--x", type=_site, default=(0, 0))
    sp.add_argument("--y", type=_site, default=(0, 0))

    sp = add("cover", cmd_cover, "csv", help="cover times of independent replicas")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--replicas", type=_positive_int, default=10)

    sp = add("hitprob", cmd_hitprob, "text", help="cofactor formula against the absorption oracle")
    sp.add_argument("--domain", required=True, help="torus:N or disk:R")
    sp.add_argument("--points", type=_sites, required=True, help="'x1,y1;x2,y2;...'")
    sp.add_argument("--witness", type=_site, required=True)
    sp.add_argument("--kill", type=_sites, default=None, help="explicit killing sites 'x,y;...'")
    sp.add_argument("--kill-center", type=_site, default=None)
    sp.add_argument("--kill-radius", type=float, default=None)
    sp.add_argument("--no-kill", action="store_true", help="no killing region on the torus")
    sp.add_argument("--form", choices=("cramer", "factored"), default="cramer")

    sp = add("geometry", cmd_geometry, "csv", help="matrix assignment, class counts, weighted sums")
    sp.add_argument("action", choices=("assign", "count", "sumcheck"))
    sp.add_argument("--config", type=_json_arg, required=True, help="JSON object, or @file")

    sp = add("simulate", cmd_simulate, "csv", help="late-point tuple counts over replicas")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--j", type=_positive_int, required=True)
    sp.add_argument("--n-grid", type=_int_list, required=True)
    sp.add_argument("--replicas", type=_positive_int, required=True)

    sp = add("verify-all", cmd_verify_all, "text", help="run the acceptance criteria")
    sp.add_argument("--quick", action="store_true", help="smaller samples, same tolerances")
    sp.add_argument("--only", type=_int_list, default=None, help="criterion numbers, e.g. 1,2,9")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.format is None:
        args.format = args.default_format
    try:
        code = args.func(args)
    except KeyError as exc:
        print(f"error: missing config key {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (LatePointsError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


def main() -> None:
    sys.exit(run())
