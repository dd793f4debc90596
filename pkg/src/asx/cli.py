"""Command-line front end.

    asx solve --builtin airy --terms 200 --out coeffs.json
    asx stokes --builtin ei --theta 1.0472 --out report.json
    asx verify --suite paper

Exit codes: 0 on success, 1 when a computation fails (or a verify check
misses), 2 on usage or schema errors.  Failures also print a JSON object
``{"code", "message", "pointer"}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from mpmath import mp, mpf

from .core import Ray, ray_grid, weight_profile
from .errors import AsxError, SchemaError
from .formal import GrowthModel, fit_growth, linear_series, nonlinear_series
from .io import (
    builtin_path,
    coefficients_doc,
    decomposition_doc,
    dump_json,
    emit_table,
    load_problem,
    render_real,
    resolve_precision,
    stokes_doc,
)
from .models import canonicalize
from .numeric import parse_scalar, to_mp, working_precision
from .stokes import (
    decompose_rational,
    h_from_bi,
    ref_ei,
    stokes_constant,
    verify_decomposition,
)
from .summation import DEFAULT_B, least_term_index, sum_least_term

SAMPLERS = {"ei": ref_ei, "h-bi": h_from_bi}


class UsageError(Exception):
    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(code: str, message: str, pointer: Optional[str] = None) -> None:
    print(json.dumps({"code": code, "message": message, "pointer": pointer}), file=sys.stderr)


# -- shared plumbing -------------------------------------------------------------------

def _load(args):
    if bool(args.problem) == bool(args.builtin):
        raise UsageError("give exactly one of --problem or --builtin")
    path = builtin_path(args.builtin) if args.builtin else args.problem
    return load_problem(path, prec=args.prec)


def _bits(args, lp) -> int:
    return resolve_precision(args.prec, lp.precision_bits if lp is not None else None)


def _number(text: str, flag: str):
    try:
        return parse_scalar(text)
    except (ValueError, ZeroDivisionError):
        try:
            return mp.mpmathify(text)
        except (ValueError, TypeError):
            raise UsageError(f"cannot parse {flag} value {text!r}") from None


def _canonical(lp):
    """The problem to expand, canonicalised when needed."""
    p = lp.problem
    if lp.kind == "second_order_linear" and (lp.canonicalize or not p.is_canonical):
        p, _ = canonicalize(p)
    return p


def _series(lp, terms: int):
    if lp.kind == "second_order_linear":
        return linear_series(_canonical(lp), terms)
    if lp.kind == "first_order_polynomial":
        return nonlinear_series(lp.problem, terms)
    if lp.kind == "model_series":
        return lp.problem
    raise UsageError(f"a {lp.kind} problem has no formal series; use 'decompose'")


def _growth(lp, seq):
    if lp.kind == "first_order_polynomial":
        p = lp.problem
        return GrowthModel.factorial(alpha=p.alpha, r=p.r)
    if lp.kind == "model_series":
        g = lp.growth
        return GrowthModel(R=g.get("R", 1), alpha=g.get("alpha", 1), r=g.get("r", 0),
                           gamma=g.get("gamma", 1))
    return fit_growth(seq, 1, 0)


def _sampler(lp):
    if lp.reference is None:
        raise UsageError("this problem has no reference solution; set 'reference' in the file")
    try:
        return SAMPLERS[lp.reference]
    except KeyError:
        raise SchemaError(f"unknown reference {lp.reference!r}", "/reference") from None


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _plot_path(args, default_name: str) -> Optional[Path]:
    if args.plot:
        return Path(args.plot)
    if args.plot_dir:
        return Path(args.plot_dir) / default_name
    return None


# -- subcommands -----------------------------------------------------------------------

def cmd_solve(args) -> int:
    lp = _load(args)
    bits = _bits(args, lp)
    with working_precision(bits):
        seq = _series(lp, args.terms)
        if args.format == "csv":
            rows = [{"n": n, "c": c} for n, c in enumerate(seq)]
            _write(emit_table(rows, "csv", columns=["n", "c"]), args.out)
        else:
            _write(dump_json(coefficients_doc(seq, lp.name, bits)), args.out)
        path = _plot_path(args, f"{lp.name or 'series'}_coefficients.png")
        if path:
            from .plots import plot_coefficients

            plot_coefficients(seq, path, scale=lambda n: mp.gamma(n + 1))
    return 0


def cmd_sum(args) -> int:
    lp = _load(args)
    bits = _bits(args, lp)
    with working_precision(bits):
        seq = _series(lp, args.terms)
        g = _growth(lp, seq)
        rows = []
        for text in args.x:
            x = to_mp(_number(text, "--x"))
            if args.theta is not None:
                x = Ray(to_mp(_number(args.theta, "--theta"))).point(x)
            value, bound = sum_least_term(seq, g, x, C=_number(args.C, "--C"), B=_number(args.B, "--B"),
                                          rule=args.rule)
            row = {"x": x, "n_x": least_term_index(g, x, rule=args.rule), "value": value, "bound": bound}
            if lp.reference is not None:
                ref = _sampler(lp)(x)
                row["reference"] = ref
                row["error"] = abs(value - ref)
            rows.append(row)
        cols = list(rows[0]) if rows else ["x", "n_x", "value", "bound"]
        _write(emit_table(rows, args.format, columns=cols), args.out)
    return 0


def cmd_weight(args) -> int:
    lp = _load(args)
    bits = _bits(args, lp)
    with working_precision(bits):
        f = _sampler(lp)
        seq = _series(lp, args.kmax + 1)
        base = getattr(lp.problem, "ray", None) or Ray()
        theta = _number(args.theta, "--theta") if args.theta is not None else base.theta
        ray = Ray(theta, base.x0)
        grid = ray_grid(ray, to_mp(_number(args.grid, "--grid")), density=args.density)
        prof = weight_profile(f, seq, ray, range(1, args.kmax + 1), grid)
        rows = [{"n": n, "w": w} for n, w in sorted(prof.samples.items())]
        _write(emit_table(rows, args.format, columns=["n", "w"]), args.out)
        path = _plot_path(args, f"{lp.name or 'problem'}_weight.png")
        if path:
            from .plots import plot_weight_profile

            plot_weight_profile([r["n"] for r in rows], [r["w"] for r in rows], path)
    return 0


def _schedule(text: str) -> list:
    try:
        parts = [int(v) for v in text.split(":")]
    except ValueError:
        raise UsageError(f"--schedule expects start:stop:step, got {text!r}") from None
    if len(parts) != 3 or parts[2] <= 0 or parts[0] <= 0 or parts[1] < parts[0]:
        raise UsageError(f"--schedule expects start:stop:step, got {text!r}")
    a, b, step = parts
    return list(range(a, b + 1, step))


def cmd_stokes(args) -> int:
    lp = _load(args)
    bits = _bits(args, lp)
    with working_precision(bits):
        f = _sampler(lp)
        sched = _schedule(args.schedule)
        seq = _series(lp, 2 * max(sched) + 40)
        g = _growth(lp, seq)
        theta = to_mp(_number(args.theta, "--theta"))
        report = stokes_constant(f, seq, Ray(theta, 1), sched, g=g, order=args.order,
                                 tol=to_mp(_number(args.tol, "--tol")))
        if args.format == "csv":
            rows = [{"x": x, "n": n, "E": e} for x, n, e in report.samples]
            _write(emit_table(rows, "csv", columns=["x", "n", "E"]), args.out)
        else:
            _write(dump_json(stokes_doc(report, bits)), args.out)
        path = _plot_path(args, f"{lp.name or 'problem'}_stokes.png")
        if path:
            from .plots import plot_stokes_report

            plot_stokes_report(report, path)
    return 0


def cmd_decompose(args) -> int:
    lp = _load(args)
    if lp.kind != "rational_inhom":
        raise UsageError("decompose needs a rational_inhom problem")
    bits = _bits(args, lp)
    with working_precision(bits):
        C = _number(args.C, "--C") if args.C is not None else lp.C
        d = decompose_rational(lp.problem, C=C, terms=args.terms)
        residual = None
        if args.grid:
            xs = [_number(v, "--grid") for v in args.grid.split(",")]
            residual = verify_decomposition(lp.problem, d, xs)
        if args.format == "csv":
            rows = [{"m": m, "h": h} for m, h in enumerate(d.H)]
            _write(emit_table(rows, "csv", columns=["m", "h"]), args.out)
        else:
            _write(dump_json(decomposition_doc(d, bits, residual)), args.out)
        path = _plot_path(args, f"{lp.name or 'rational'}_decomposition.png")
        if path:
            from .plots import plot_decomposition

            plot_decomposition(d, path)
    return 0


def cmd_verify(args) -> int:
    from .verification import CHECKS, QUICK, remainder_law_samples, run_checks

    ids = sorted(CHECKS) if args.suite == "paper" else list(QUICK)
    results = run_checks(ids)
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    if args.out:
        rows = [{"criterion": r.criterion, "name": r.name, "passed": r.passed,
                 "seconds": render_real(mpf(round(r.seconds, 3)), 6), "detail": r.detail} for r in results]
        emit_table(rows, args.format, args.out, columns=["criterion", "name", "passed", "seconds", "detail"])
    if args.plot_dir:
        from .core import a_star
        from .plots import plot_remainder_law, plot_sup_profile
        from .summation import sup_statistic
        from .verification import ei_series

        out = Path(args.plot_dir)
        with working_precision(256):
            plot_remainder_law(remainder_law_samples(), -mp.sqrt(2 * mp.pi) / 3, out / "remainder_law.png")
            plot_sup_profile(sup_statistic(ei_series(1000), 200), out / "sup_statistic.png", a_star())
    return 0 if passed == len(results) else 1


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="asx", description="Exponential asymptotics on rays: series, sums, Stokes constants.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, problem=True):
        if problem:
            p.add_argument("--problem", help="problem JSON file")
            p.add_argument("--builtin", choices=("ei", "airy", "h-equation"), help="bundled problem")
        p.add_argument("--prec", type=int, default=None, help="working precision in bits")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--plot", default=None, help="write a figure to this file")
        p.add_argument("--plot-dir", default=None, help="write figures into this directory")

    p = sub.add_parser("solve", help="formal series coefficients")
    common(p)
    p.add_argument("--terms", type=int, default=100)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sum", help="least-term summation")
    common(p)
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--theta", default=None)
    p.add_argument("--terms", type=int, default=400)
    p.add_argument("--B", default=str(DEFAULT_B))
    p.add_argument("--C", default="1")
    p.add_argument("--rule", choices=("growth", "transseries"), default="growth")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("weight", help="grid estimate of the weight profile")
    common(p)
    p.add_argument("--kmax", type=int, default=30)
    p.add_argument("--grid", default="60", help="largest |x| of the ray grid")
    p.add_argument("--density", type=int, default=8)
    p.add_argument("--theta", default=None)
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("stokes", help="Stokes constant on a ray")
    common(p)
    p.add_argument("--theta", default="0")
    p.add_argument("--schedule", default="20:60:5", help="start:stop:step radii")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--tol", default="1e-3")
    p.set_defaults(func=cmd_stokes)

    p = sub.add_parser("decompose", help="split a rational inhomogeneity")
    common(p)
    p.add_argument("--terms", type=int, default=64)
    p.add_argument("--C", default=None)
    p.add_argument("--grid", default=None, help="comma-separated x values to check against quadrature")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="run the acceptance checks")
    common(p, problem=False)
    p.add_argument("--suite", choices=("paper", "quick"), default="paper")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[list] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("missing subcommand: solve, sum, weight, stokes, decompose or verify")
        return args.func(args)
    except UsageError as exc:
        _fail("usage", str(exc), exc.pointer or None)
        return 2
    except SchemaError as exc:
        _fail(exc.code, str(exc), exc.pointer)
        return 2
    except AsxError as exc:
        _fail(exc.code, str(exc))
        return 1
    except (ArithmeticError, ValueError) as exc:
        _fail("computation", str(exc))
        return 1
    except OSError as exc:
        _fail("io", str(exc))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
