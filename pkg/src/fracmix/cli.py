"""Command-line front end: ``fracmix <subcommand> [options]``.

Every subcommand writes plot-ready tables and a JSON report into ``--out``
(default: ``$FRACMIX_OUT`` or the current directory).  Exit status is 0 on
success, 1 on invalid input or usage errors, 2 when a numerical budget
cannot be met.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, NumericalBudgetError, ValidationError
from .export import write_csv, write_json

OUT_ENV = "FRACMIX_OUT"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or the current directory)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="csv writes tables as CSV plus a JSON report; json embeds tables in the report")


def _grid_flags(p, lam_min=None, lam_max=None, ratio=None):
    from .sl2model import GridConfig

    d = GridConfig()
    p.add_argument("--lam-min", type=float, default=lam_min or d.lam_min, help="inner spectral cutoff")
    p.add_argument("--lam-max", type=float, default=lam_max or d.lam_max, help="outer spectral cutoff")
    p.add_argument("--ratio", type=float, default=ratio or d.ratio, help="geometric clustering ratio near 0")
    p.add_argument("--max-step", type=float, default=None, help="largest node spacing (default: grid default)")


def _irrep_flags(p):
    p.add_argument("--series", choices=("principal", "complementary", "discrete", "mock"), default="complementary")
    p.add_argument("--mu", type=float, default=0.75, help="Casimir value (principal/complementary)")
    p.add_argument("--n", type=int, default=2, help="discrete-series parameter n >= 2")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracmix", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fracmix {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="subcommand")
    sub.required = True
    fmt = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("roots", help="maximal strongly orthogonal system and exponents", formatter_class=fmt,
                       description="Maximal SOS of a root system with zeta, p and an eta table.\n\n"
                                   "roots_eta.csv columns: direction, t, log_eta, eta\n"
                                   "  eta at a = exp(t * d) for d = +rho or -rho (equal by Weyl invariance).")
    p.add_argument("--family", required=True, choices=list("ABCDG"))
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--gamma", type=float, nargs="+", default=None,
                   help="gaps per SOS member (one value is broadcast; default 0.5)")
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--t-steps", type=int, default=11)
    _common(p)

    p = sub.add_parser("irrep", help="model description and Sobolev norms", formatter_class=fmt,
                       description="Irrep parameters, grid summary and norms of the standard test vector.\n\n"
                                   "irrep_norms.csv columns: order, generators, norm")
    _irrep_flags(p)
    _grid_flags(p)
    p.add_argument("--max-order", type=int, default=2)
    _common(p)

    p = sub.add_parser("decay", help="matrix-coefficient decay curves and rate fits", formatter_class=fmt,
                       description="|<pi(g_t) v, v>| for the standard vector v of an irrep.\n\n"
                                   "decay_curve.csv columns: time, magnitude\n"
                                   "decay_fit.json: exponent, window, residual, samples and the gap rate.")
    _irrep_flags(p)
    p.add_argument("--flow", choices=("geodesic", "horocycle"), default="geodesic")
    p.add_argument("--t-max", type=float, default=None, help="last sample (default 6 geodesic, 200 horocycle)")
    p.add_argument("--samples", type=int, default=None, help="number of samples (default 121 / 200)")
    p.add_argument("--window", type=float, nargs="+", default=None, help="fit window 'lo hi'")
    _common(p)

    p = sub.add_parser("solve", help="classical/fractional solve and threshold scan", formatter_class=fmt,
                       description="Solve |U|^r omega = xi for the standard vector xi.\n\n"
                                   "solve_scan.csv columns (mode scan): r, verdict, alpha, partial_norm_slope\n"
                                   "solve_table.csv columns (mode classical): order, ratio")
    _irrep_flags(p)
    _grid_flags(p)
    p.add_argument("--mode", choices=("fractional", "classical", "scan"), default="scan")
    p.add_argument("--r", type=float, default=0.2, help="exponent for mode fractional")
    p.add_argument("--r-max", type=float, default=1.2, help="scan grid is 0.005, 0.015, ... up to r-max")
    _common(p)

    p = sub.add_parser("tauberian", help="Tauberian kernel identity for a Gaussian", formatter_class=fmt,
                       description="Compare int tau |lam|^(-2r) with its Fourier dual.\n\n"
                                   "tauberian.csv columns: r, lhs, rhs, relative_error, error_bound, closed_form_lhs")
    p.add_argument("--r", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4], help="exponents in (0, 1/2)")
    _common(p)

    p = sub.add_parser("typeii", help="multi-factor fractional solver", formatter_class=fmt,
                       description="Type II solve on a tensor product of complementary factors.\n\n"
                                   "typeii_branches.csv columns: branch, verdict, xi_norm, omega_norm, pieces\n"
                                   "typeii_witness.csv columns: branch, verdict, divergent_factor, "
                                   "divergence_exponent")
    p.add_argument("--varpi", type=float, nargs="+", default=[0.5, 0.5], help="one complementary parameter per factor")
    p.add_argument("--r", type=float, nargs="+", default=[0.2, 0.2], help="one exponent per factor")
    p.add_argument("--mode", choices=("solve", "sharpness"), default="solve")
    p.add_argument("--factor", type=int, default=1, help="1-based factor for the sharpness witness")
    p.add_argument("--witness-r", type=float, default=0.3, help="exponent above the gap for the witness")
    p.add_argument("--epsilon", type=float, default=0.1)
    _common(p)

    p = sub.add_parser("mixbound", help="partition scheduler and mixing bounds", formatter_class=fmt,
                       description="Random gap configurations on B_m with the maximal SOS as roots.\n\n"
                                   "mixbound.csv columns: trial, n, m, i0, orientation, k, log_c, j, q1, q2, "
                                   "verified, kernel")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--ranks", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=8)
    _common(p)

    p = sub.add_parser("selftest", help="run the invariant suites", formatter_class=fmt,
                       description="Flow unitarity, group laws, semigroup, cutoff complementarity, refinement\n"
                                   "convergence, conjugation scaling, root systems and partitions.\n\n"
                                   "selftest.csv columns: suite, passed, detail")
    p.add_argument("--suite", action="append", default=None, help="run only this suite (repeatable)")
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit(args, name, report, tables=None):
    """Write ``name.json`` and, in csv format, one CSV per table."""
    out = _out_dir(args)
    written = []
    tables = tables or {}
    if args.format == "json":
        report = dict(report)
        report.update({k: rows for k, (rows, _) in tables.items()})
    else:
        for k, (rows, cols) in tables.items():
            written.append(write_csv(out / f"{k}.csv", rows, cols))
    written.append(write_json(out / f"{name}.json", report))
    for w in written:
        print(f"wrote {w}")


def _irrep(args):
    from .sl2model import make_irrep

    param = {"discrete": args.n, "mock": None}.get(args.series, args.mu)
    return make_irrep(args.series, param)


def _grid(args, **override):
    from .sl2model import GridConfig

    kw = {"lam_min": args.lam_min, "lam_max": args.lam_max, "ratio": args.ratio}
    if args.max_step is not None:
        kw["max_step"] = args.max_step
    kw.update(override)
    return GridConfig(**kw)


def _positive(name, value):
    if not value > 0:
        raise DomainError(f"--{name} must be positive")


# ---------------------------------------------------------------------------
# subcommands


def cmd_roots(args):
    from .rootsys import (
        CartanElement,
        SpectralGapProfile,
        build_root_system,
        find_maximal_sos,
        log_eta_epsilon,
        format_root,
        regularity_exponents,
    )

    _positive("t-steps", args.t_steps)
    rs = build_root_system(args.family, args.rank)
    sos = find_maximal_sos(rs)
    g = args.gamma or [0.5]
    if len(g) == 1:
        g = g * len(sos)
    gaps = SpectralGapProfile(tuple(g))
    zeta, p = regularity_exponents(sos, gaps, args.epsilon)
    rho = np.sum(np.array(rs.positive_roots, dtype=float), axis=0) / 2.0
    rows = []
    for label, d in (("+rho", rho), ("-rho", -rho)):
        for t in np.linspace(0.0, args.t_max, args.t_steps):
            le = log_eta_epsilon(sos, CartanElement(t * d), gaps, args.epsilon, rs)
            rows.append({"direction": label, "t": float(t), "log_eta": le, "eta": math.exp(le)})
    report = {
        "name": rs.name,
        "positive_roots": len(rs.positive_roots),
        "sos": sos.to_dict(),
        "sos_labels": [format_root(m) for m in sos.members],
        "gaps": gaps.to_dict(),
        "epsilon": args.epsilon,
        "zeta": zeta,
        "p": p,
    }
    print(f"{rs.name}: maximal SOS {{{', '.join(report['sos_labels'])}}}, "
          f"coefficients {list(sos.formal_sum_coeffs)}, zeta = {zeta:.6g}, p = {p:.6g}")
    _emit(args, "roots", report, {"roots_eta": (rows, ["direction", "t", "log_eta", "eta"])})


def cmd_irrep(args):
    from .sl2model import SpectralGrid, sobolev_norm, vector, weighted_norm

    ir = _irrep(args)
    cfg = _grid(args)
    f = vector(ir, None, cfg)
    gens = ("X", "U", "V")
    rows = []
    for k in range(args.max_order + 1):
        rows.append({"order": k, "generators": "XUV", "norm": sobolev_norm(f, gens, k, ir)})
    report = {
        "irrep": ir.to_dict(),
        "grid": SpectralGrid.for_irrep(ir, cfg).describe(),
        "optimal_rate": ir.optimal_rate,
        "norm": weighted_norm(f),
    }
    print(f"{ir.series} mu = {ir.mu:g}: varpi = {ir.varpi:g}, optimal rate {ir.optimal_rate:g}")
    _emit(args, "irrep", report, {"irrep_norms": (rows, ["order", "generators", "norm"])})


def decay_grid(flow):
    from .sl2model import GridConfig

    if flow == "geodesic":
        return GridConfig(lam_min=1e-10, lam_max=20.0)
    return GridConfig(lam_max=10.0, max_step=0.005)


def cmd_decay(args):
    from .decay import GEODESIC_WINDOW, HOROCYCLE_WINDOW, coeff_curve, fit_rate
    from .sl2model import vector

    ir = _irrep(args)
    v = vector(ir, None, decay_grid(args.flow))
    if args.flow == "geodesic":
        t_max = 6.0 if args.t_max is None else args.t_max
        _positive("t-max", t_max)
        times = np.linspace(0.0, t_max, args.samples or 121)
        window = tuple(args.window) if args.window else GEODESIC_WINDOW
    else:
        t_max = 200.0 if args.t_max is None else args.t_max
        _positive("t-max", t_max)
        times = np.concatenate([[0.0], np.geomspace(1.0, t_max, (args.samples or 200) - 1)])
        window = tuple(args.window) if args.window else HOROCYCLE_WINDOW
    if len(window) != 2 or not window[0] < window[1]:
        raise DomainError("--window needs two increasing values")
    curve = coeff_curve(v, v, args.flow, times, ir)
    fit = fit_rate(curve, window)
    # the standard vector decays at the gap rate; smoother vectors may decay faster
    gap_rate = ir.optimal_rate if args.flow == "geodesic" else 2.0 * ir.optimal_rate
    report = {"irrep": ir.to_dict(), "flow": args.flow, "fit": fit.to_dict(), "gap_rate": gap_rate}
    print(f"{args.flow} decay exponent {fit.exponent:.5f} (gap rate {gap_rate:.5f})")
    _emit(args, "decay_fit", report, {"decay_curve": (curve.rows(), ["time", "magnitude"])})


def cmd_solve(args):
    from .fracsolve import classical_ratio_table, frac_solve, threshold_scan
    from .sl2model import vector

    ir = _irrep(args)
    xi = vector(ir, None, _grid(args))
    if args.mode == "fractional":
        rep = frac_solve(xi, args.r, ir)
        print(f"r = {args.r}: {rep.verdict}")
        _emit(args, "solve", {"irrep": ir.to_dict(), "r": args.r, **rep.summary()})
    elif args.mode == "classical":
        rep, table = classical_ratio_table(xi, ir)
        table = [{"order": k, "ratio": q} for k, q in table]
        print(f"classical: {rep.verdict}")
        _emit(args, "solve", {"irrep": ir.to_dict(), **rep.summary()},
              {"solve_table": (table, ["order", "ratio"])})
    else:
        _positive("r-max", args.r_max)
        grid = 0.005 + 0.01 * np.arange(int(math.floor((args.r_max - 0.005) / 0.01)) + 1)
        scan = threshold_scan(xi, ir, grid)
        report = {
            "irrep": ir.to_dict(),
            "lower": scan.lower,
            "upper": scan.upper,
            "estimate": scan.estimate,
            "resolution": scan.resolution,
            "monotone": scan.monotone,
            "status": scan.status,
            "expected_threshold": ir.optimal_rate,
        }
        print(f"threshold bracket [{scan.lower}, {scan.upper}] ({scan.status}); gap {ir.optimal_rate:g}")
        _emit(args, "solve", report,
              {"solve_scan": (scan.to_rows(), ["r", "verdict", "alpha", "partial_norm_slope"])})


def cmd_tauberian(args):
    from .fracsolve import gaussian_density, gaussian_tauberian_oracle, tauberian_check

    rows = []
    for r in args.r:
        rep = tauberian_check(gaussian_density, r, tau_hat=lambda t: math.exp(-0.5 * t * t))
        d = rep.to_dict()
        d.pop("budgets")
        d["closed_form_lhs"] = gaussian_tauberian_oracle(r)[0]
        rows.append(d)
        print(f"r = {r}: relative error {rep.relative_error:.2e}")
    cols = ["r", "lhs", "rhs", "relative_error", "error_bound", "closed_form_lhs"]
    _emit(args, "tauberian", {"density": "standard normal", "rows": len(rows)}, {"tauberian": (rows, cols)})


def _tensor_model(varpis, eps):
    from .directint import DirectIntegralModel, TensorModel
    from .sl2model import irrep_from_varpi

    return TensorModel([DirectIntegralModel(((irrep_from_varpi(v), 1.0),)) for v in varpis], eps=eps)


def cmd_typeii(args):
    from .directint import (
        TypeIIProblem,
        product_vector,
        reconstruct,
        sharpness_witness,
        typeII_estimate_check,
        typeII_solve,
    )

    model = _tensor_model(args.varpi, args.epsilon)
    if args.mode == "sharpness":
        rep = sharpness_witness(model, args.factor, args.witness_r)
        print(f"witness at r = {args.witness_r} on factor {args.factor}: "
              f"{'all branches divergent' if rep.all_divergent else 'some branch solvable'}")
        cols = ["branch", "verdict", "divergent_factor", "divergence_exponent"]
        _emit(args, "typeii", {"mode": "sharpness", "factor": args.factor, "exponents": rep.exponents,
                               "all_divergent": rep.all_divergent},
              {"typeii_witness": (rep.rows(), cols)})
        return
    if len(args.r) != model.n:
        raise DomainError(f"--r needs {model.n} values")
    xi = product_vector(model, [f.irreps[0].standard_profile() for f in model.factors])
    problem = TypeIIProblem(args.r)
    results = typeII_solve(xi, problem, model)
    back = reconstruct(results, problem)
    est = typeII_estimate_check(results, xi, model)
    report = {
        "mode": "solve",
        "varpi": args.varpi,
        "exponents": args.r,
        "gammas": model.gammas,
        "reconstruction_error": back.max_abs_diff(xi),
        "R": est["R"],
        "naive_ratio": est["naive"],
        "budget": est["budget"],
        "budget_orders": est["orders"],
        "mapping": est["mapping"],
    }
    print(f"{len(results)} branch(es) solvable; R = {est['R']:.4g}")
    cols = ["branch", "verdict", "xi_norm", "omega_norm", "pieces"]
    _emit(args, "typeii", report, {"typeii_branches": ([r.row() for r in results], cols)})


def cmd_mixbound(args):
    from .mixsched import higher_order_bound, plan_partition, verify_partition
    from .selftest import random_configurations

    _positive("samples", args.samples)
    if not 2 <= args.n_min <= args.n_max:
        raise DomainError("need 2 <= n-min <= n-max")
    ranks = tuple(args.ranks)
    if any(r < 1 for r in ranks):
        raise DomainError("ranks must be positive integers")
    cfgs = random_configurations(args.samples, args.seed, ranks, range(args.n_min, args.n_max + 1),
                                 args.epsilon)
    rows = []
    for k, cfg in enumerate(cfgs):
        plan, c2, _ = plan_partition(cfg, args.epsilon)
        ok, _ = verify_partition(plan, c2)
        hb = higher_order_bound(cfg.n, cfg, args.epsilon)
        rows.append({"trial": k, "n": cfg.n, "m": cfg.m, "i0": plan.i0, "orientation": plan.orientation,
                     "k": plan.k, "log_c": plan.log_c, "j": plan.j, "q1": plan.q1, "q2": plan.q2,
                     "verified": ok, "kernel": hb["kernel"]})
    passed = sum(r["verified"] for r in rows)
    print(f"{passed}/{len(rows)} partitions verified")
    cols = ["trial", "n", "m", "i0", "orientation", "k", "log_c", "j", "q1", "q2", "verified", "kernel"]
    _emit(args, "mixbound", {"samples": len(rows), "seed": args.seed, "epsilon": args.epsilon,
                             "verified": passed}, {"mixbound": (rows, cols)})
    if passed != len(rows):
        raise _BudgetFailure(f"{len(rows) - passed} partition(s) failed verification")


class _BudgetFailure(NumericalBudgetError):
    pass


def cmd_selftest(args):
    from .selftest import SUITES, run_all

    unknown = set(args.suite or ()) - set(SUITES)
    if unknown:
        raise DomainError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    rows = run_all(args.suite)
    for r in rows:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['suite']:24s} {r['detail']} ({r['seconds']:.2f} s)")
    stable = [{k: r[k] for k in ("suite", "passed", "detail")} for r in rows]
    npass = sum(r["passed"] for r in rows)
    print(f"{npass}/{len(rows)} suites passed")
    _emit(args, "selftest", {"passed": npass, "total": len(rows)},
          {"selftest": (stable, ["suite", "passed", "detail"])})
    if npass != len(rows):
        raise _BudgetFailure("some invariant suites failed")


COMMANDS = {
    "roots": cmd_roots,
    "irrep": cmd_irrep,
    "decay": cmd_decay,
    "solve": cmd_solve,
    "tauberian": cmd_tauberian,
    "typeii": cmd_typeii,
    "mixbound": cmd_mixbound,
    "selftest": cmd_selftest,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"fracmix {args.command}: invalid input: {exc}", file=sys.stderr)
        return 1
    except NumericalBudgetError as exc:
        print(f"fracmix {args.command}: numerical budget exceeded: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
