"""Command-line front end: every driver, machine-readable output, stable exit codes.

Exit codes: 0 all asserted gates passed; 2 domain/usage error; 3 the
iteration report has no trustworthy window; 4 an operator check row
failed; 5 a simulation gate was breached.  Config precedence is flags,
then OCF_* environment variables, then built-in defaults.  Output is
CSV (default) or JSON; floats carry 17 significant digits; reruns with
the same arguments and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import constants, kuzmin, markov, simulation
from .core import DomainError, convergents, expand
from .report import ConvergenceReport, format_value

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NO_WINDOW = 3
EXIT_MARKOV_FAIL = 4
EXIT_SIM_BREACH = 5

DEFAULT_SEED = 20_240_901


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return value


def _env_int(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"environment variable {name}={raw!r} is not an integer")


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _emit_report(report: ConvergenceReport, fmt: str, out_path: str | None) -> None:
    _emit(report.to_csv() if fmt == "csv" else report.to_json(), out_path)


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    p.add_argument("--out", default=None, metavar="PATH", help="write output here instead of stdout")


def cmd_constants(args) -> int:
    vals = constants.constants_dict()
    rc = kuzmin.eta_constant()
    vals["eta_computed"] = rc.value
    vals["eta_inner_sum_computed"] = rc.inner_sum
    if args.format == "json":
        _emit(json.dumps({k: vals[k] for k in sorted(vals)}, indent=2) + "\n", args.out)
    else:
        rep = ConvergenceReport(columns=("name", "value"))
        for k in sorted(vals):
            rep.add_row(k, vals[k])
        _emit(rep.to_csv(), args.out)
    return EXIT_OK


def cmd_expand(args) -> int:
    try:
        x = Fraction(args.numerator, args.denominator)
        exp = expand(x)
    except (DomainError, ZeroDivisionError) as exc:
        print(f"expand: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    rows = convergents(exp.digits)
    if args.format == "json":
        payload = {
            "digits": [{"a": d.a, "eps": d.eps} for d in exp.digits],
            "convergents": [
                {"n": r.n, "p": r.p, "q": r.q, "delta": r.delta} for r in rows
            ],
            "terminated": exp.terminated,
        }
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        rep = ConvergenceReport(
            columns=("n", "a", "eps", "p", "q", "delta"),
            summary={"terminated": exp.terminated},
        )
        for d, r in zip(exp.digits, rows[2:]):
            rep.add_row(r.n, d.a, d.eps, r.p, r.q, r.delta)
        _emit(rep.to_csv(), args.out)
    return EXIT_OK


def cmd_eta(args) -> int:
    rc = kuzmin.eta_constant(args.tolerance)
    payload = {
        "eta": rc.value,
        "inner_sum": rc.inner_sum,
        "terms_used": rc.terms_used,
        "tail_bound": rc.tail_bound,
    }
    if args.format == "json":
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        rep = ConvergenceReport(columns=("name", "value"))
        for k, v in payload.items():
            rep.add_row(k, v)
        _emit(rep.to_csv(), args.out)
    return EXIT_OK


def cmd_kuzmin(args) -> int:
    report = kuzmin.iterate_and_report(
        n_iters=args.iterations, grid_size=args.grid_size, i_max=args.i_max
    )
    usable = [r for r in report.rows if r[0] >= 2]
    if len(usable) < 2:
        _emit_report(report, args.format, args.out)
        print("kuzmin: trustworthy iteration window is empty", file=sys.stderr)
        return EXIT_NO_WINDOW
    m_series = [r[2] for r in report.rows]
    try:
        report.summary["fitted_rate"] = simulation.rate_fit(m_series)
    except ValueError:
        report.summary["fitted_rate"] = float("nan")
    _emit_report(report, args.format, args.out)
    return EXIT_OK if report.summary.get("all_ratios_ok") else EXIT_NO_WINDOW


def cmd_markov(args) -> int:
    failed = False
    if args.subcommand == "rowsum":
        i_max = args.i_max if args.i_max is not None else 20_001
        w = np.linspace(0.0, constants.G, args.cases)
        res = markov.row_sum_residual(w, i_max=i_max)
        rep = ConvergenceReport(columns=("w", "residual", "passed"))
        for wi, ri in zip(w, res):
            ok = bool(ri <= 1e-10)
            failed |= not ok
            rep.add_row(float(wi), float(ri), ok)
    elif args.subcommand == "stationarity":
        rep = ConvergenceReport(columns=("lo", "hi", "residual", "passed"))
        for iv, resid in markov.stationarity_suite():
            ok = bool(resid <= 1e-8)
            failed |= not ok
            rep.add_row(iv.lo, iv.hi, resid, ok)
    elif args.subcommand == "prop1":
        seed = args.seed if args.seed is not None else _env_int("OCF_SEED", 20_251)
        i_max = args.i_max if args.i_max is not None else 4001
        rep = ConvergenceReport(
            columns=("case", "var_f", "sup_f", "var_Uf", "bound", "passed"),
            summary={"seed": seed},
        )
        for j, f in enumerate(markov.random_bv_functions(50, seed=seed)):
            vr = markov.check_prop1(f, i_max=i_max)
            failed |= not vr.satisfied
            rep.add_row(f"random_{j}", vr.var_f, vr.sup_f, vr.var_Uf, vr.bound, vr.satisfied)
        for y in np.linspace(0.0, constants.G, 21):
            vr = markov.check_prop1_indicator(float(y), grid_size=args.grid_size)
            failed |= not vr.satisfied
            rep.add_row(
                f"indicator_{y:.6f}", vr.var_f, vr.sup_f, vr.var_Uf, vr.bound, vr.satisfied
            )
    elif args.subcommand == "thG":
        i_max = args.i_max if args.i_max is not None else 2001
        rep = markov.theorem_thG_check(
            s0=args.s0, n_max=args.n, grid_size=args.grid_size, matrix_i_max=i_max
        )
        failed = not all(rep.column("passed"))
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit(f"unknown markov subcommand {args.subcommand}")
    _emit_report(rep, args.format, args.out)
    return EXIT_MARKOV_FAIL if failed else EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _env_int("OCF_SEED", DEFAULT_SEED)
    threads = args.threads if args.threads is not None else _env_int(
        "OCF_THREADS", os.cpu_count() or 1
    )
    ns = tuple(sorted(set(args.report_ns)))
    result = simulation.simulate_statistics(
        seed=seed,
        samples=args.samples,
        steps=args.steps,
        report_ns=ns,
        threads=threads,
    )
    root_n = math.sqrt(args.samples)
    rep = ConvergenceReport(
        columns=("n", "ks_vs_limitH", "ks_s_vs_xi", "terminated_count"),
        summary={"seed": seed, "samples": args.samples},
    )
    breach = False
    for n in ns:
        ks_t = simulation.empirical_Hn(result, n).statistic
        ks_s = simulation.empirical_s_law(result, n).statistic if n > 0 else float("nan")
        if n == 0:
            breach |= ks_t > 2.0 / root_n
        if n >= 10:
            breach |= ks_t > 5.0 / root_n
            breach |= ks_s > 0.01 + 5.0 / root_n
        rep.add_row(n, ks_t, ks_s, result.terminated_count(n))
    for t in (1.5, 2.0, 5.0):
        frac = simulation.r1_exceedance(result, t)
        rep.summary[f"lambda_r1_gt_{format_value(t)}"] = frac
        breach |= abs(frac - 1.0 / t) > 3.0 / root_n
    _emit_report(rep, args.format, args.out)
    return EXIT_SIM_BREACH if breach else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocf",
        description="Odd-partial-quotient continued fractions: exact algebra, "
        "limit laws, operator checks, and Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print every named constant")
    _add_io_flags(p)
    p.set_defaults(handler=cmd_constants)

    p = sub.add_parser("expand", help="odd expansion of an exact rational in [0, 1]")
    p.add_argument("numerator", type=int)
    p.add_argument("denominator", type=int)
    _add_io_flags(p)
    p.set_defaults(handler=cmd_expand)

    p = sub.add_parser("eta", help="the derivative-contraction constant")
    p.add_argument("--tolerance", type=float, default=1e-9)
    _add_io_flags(p)
    p.set_defaults(handler=cmd_eta)

    p = sub.add_parser("kuzmin", help="iterate the distribution-function recursion")
    p.add_argument("--iterations", type=_positive_int, default=10)
    p.add_argument("--grid-size", type=_positive_int, default=4097)
    p.add_argument("--i-max", type=_positive_int, default=2001)
    _add_io_flags(p)
    p.set_defaults(handler=cmd_kuzmin)

    p = sub.add_parser("markov", help="transition kernel and operator checks")
    p.add_argument("subcommand", choices=("rowsum", "stationarity", "prop1", "thG"))
    p.add_argument("--grid-size", type=_positive_int, default=4097)
    p.add_argument("--i-max", type=_positive_int, default=None)
    p.add_argument("--n", type=_positive_int, default=12, help="iteration depth for thG")
    p.add_argument("--s0", type=float, default=0.0, help="starting state for thG")
    p.add_argument("--cases", type=_positive_int, default=101, help="state count for rowsum")
    p.add_argument("--seed", type=int, default=None, help="seed for the prop1 suite")
    _add_io_flags(p)
    p.set_defaults(handler=cmd_markov)

    p = sub.add_parser("simulate", help="Monte Carlo orbit statistics")
    p.add_argument("--samples", type=_positive_int, default=1_000_000)
    p.add_argument("--steps", type=_positive_int, default=30)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=_positive_int, default=None)
    p.add_argument(
        "--report-ns",
        type=int,
        nargs="+",
        default=[0, 1, 5, 10, 12],
        metavar="N",
        help="orbit depths to report",
    )
    _add_io_flags(p)
    p.set_defaults(handler=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (DomainError, ValueError) as exc:
        print(f"ocf: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
