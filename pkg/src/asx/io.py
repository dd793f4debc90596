"""Problem files, output tables and their round trip.

Numbers cross the file boundary as strings: ``"p/q"`` (or an integer) for
exact rationals and decimal strings otherwise, paired as ``[re, im]``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

from mpmath import mp, mpc, mpf

from .core import CoeffSeq, Ray
from .errors import AsxError, SchemaError
from .models import FirstOrderProblem, RationalEvaluator, SecondOrderProblem, closed_form_discrepancy
from .numeric import DEFAULT_PRECISION, is_exact, parse_scalar, to_mp, working_precision

KINDS = ("second_order_linear", "first_order_polynomial", "model_series", "rational_inhom")
BUILTINS = ("ei", "airy", "h-equation")
CSV_DIGITS = 40


# -- scalars ---------------------------------------------------------------------

def _digits(bits: Optional[int] = None) -> int:
    bits = bits or mp.prec
    return int(bits * 0.30103) + 3


def render_real(v, digits: Optional[int] = None) -> str:
    if is_exact(v):
        v = Fraction(v)
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    v = to_mp(v)
    if v == 0:
        return "0"
    return mp.nstr(v, digits or _digits(), min_fixed=0, max_fixed=0, strip_zeros=False)


def render_scalar(v, digits: Optional[int] = None) -> list:
    """``[re, im]`` strings."""
    if is_exact(v):
        return [render_real(v, digits), "0"]
    v = to_mp(v)
    if isinstance(v, mpc):
        return [render_real(v.real, digits), render_real(v.imag, digits)]
    return [render_real(v, digits), "0"]


def parse_value(node, pointer: str = ""):
    """Parse a string or an ``[re, im]`` pair; exact when both parts are rational."""
    try:
        if isinstance(node, str):
            return parse_scalar(node)
        if isinstance(node, (int,)) and not isinstance(node, bool):
            return Fraction(node)
        if isinstance(node, list) and len(node) == 2 and all(isinstance(p, str) for p in node):
            re, im = parse_scalar(node[0]), parse_scalar(node[1])
            if im == 0:
                return re
            return mpc(to_mp(re), to_mp(im))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"cannot parse number {node!r}: {exc}", pointer) from exc
    raise SchemaError(f"expected a decimal string or an [re, im] pair, got {node!r}", pointer)


def parse_list(node, pointer: str) -> list:
    if not isinstance(node, list):
        raise SchemaError("expected an array of numbers", pointer)
    return [parse_value(v, f"{pointer}/{i}") for i, v in enumerate(node)]


# -- problem files -------------------------------------------------------------------

class LoadedProblem:
    """A typed problem plus the file-level metadata the pipelines need."""

    def __init__(self, kind: str, problem, name: str, precision_bits: Optional[int],
                 reference: Optional[str] = None, canonicalize: bool = False,
                 growth: Optional[dict] = None, C=0):
        self.kind = kind
        self.problem = problem
        self.name = name
        self.precision_bits = precision_bits
        self.reference = reference
        self.canonicalize = canonicalize
        self.growth = growth or {}
        self.C = C


def _require(doc: dict, key: str, pointer: str = ""):
    if key not in doc:
        raise SchemaError(f"missing field {key!r}", f"{pointer}/{key}")
    return doc[key]


def resolve_precision(flag: Optional[int] = None, file_bits: Optional[int] = None) -> int:
    """Flag, then ``ASX_PRECISION_BITS``, then the file field, then 256."""
    if flag:
        return int(flag)
    env = os.environ.get("ASX_PRECISION_BITS")
    if env:
        return int(env)
    if file_bits:
        return int(file_bits)
    return DEFAULT_PRECISION


def builtin_path(name: str) -> Path:
    if name not in BUILTINS:
        raise SchemaError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}", "")
    return Path(str(resources.files("asx") / "data" / f"{name}.json"))


def load_problem(path, prec: Optional[int] = None) -> LoadedProblem:
    """Read and validate a problem file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "") from exc
    return problem_from_dict(doc, prec=prec)


def problem_from_dict(doc: dict, prec: Optional[int] = None) -> LoadedProblem:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", "")
    kind = _require(doc, "kind")
    if kind not in KINDS:
        raise SchemaError(f"kind must be one of {', '.join(KINDS)}", "/kind")
    file_bits = doc.get("precision_bits")
    if file_bits is not None and (not isinstance(file_bits, int) or file_bits < 64):
        raise SchemaError("precision_bits must be an integer >= 64", "/precision_bits")
    bits = resolve_precision(prec, file_bits)
    with working_precision(bits):
        return _build(doc, kind, bits)


def _ray(doc) -> Ray:
    theta = parse_value(doc.get("theta", "0"), "/theta")
    x0 = parse_value(doc.get("x0", "1"), "/x0")
    try:
        return Ray(theta, x0)
    except AsxError as exc:
        raise SchemaError(str(exc), "/theta") from exc


def _build(doc: dict, kind: str, bits: int) -> LoadedProblem:
    name = doc.get("name", "")
    coeffs = doc.get("coefficients", {})
    finite = bool(doc.get("finite", False))
    reference = doc.get("reference")
    if kind == "second_order_linear":
        a = parse_list(_require(coeffs, "a", "/coefficients"), "/coefficients/a")
        b = parse_list(_require(coeffs, "b", "/coefficients"), "/coefficients/b")
        if not a:
            raise SchemaError("a needs at least a_0", "/coefficients/a")
        kappa = parse_value(_require(doc, "kappa"), "/kappa")
        a_func = b_func = None
        cf = doc.get("closed_form") or {}
        for key in ("a", "b"):
            if key in cf:
                node = cf[key]
                try:
                    ev = RationalEvaluator(
                        tuple(parse_list(node.get("numerator", []), f"/closed_form/{key}/numerator")),
                        tuple(parse_list(node.get("denominator", ["1"]), f"/closed_form/{key}/denominator")),
                    )
                except AsxError as exc:
                    raise SchemaError(str(exc), f"/closed_form/{key}") from exc
                if key == "a":
                    a_func = ev
                else:
                    b_func = ev
        try:
            prob = SecondOrderProblem(CoeffSeq(a, finite=finite), CoeffSeq(b, finite=finite),
                                      kappa, _ray(doc), a_func, b_func, name)
        except AsxError as exc:
            pointer = "/kappa" if "kappa" in str(exc) else "/coefficients"
            raise SchemaError(str(exc), pointer) from exc
        if a_func is not None or b_func is not None:
            # consistency of closed forms and series on a small grid
            if finite:
                grid = [to_mp(prob.ray.x0) * k for k in (2, 5, 10)]
                worst = closed_form_discrepancy(prob, grid)
                if worst > mpf(2) ** (-bits + 16):
                    raise SchemaError("closed form disagrees with the coefficient series", "/closed_form")
        return LoadedProblem(kind, prob, name, doc.get("precision_bits"), reference,
                             bool(doc.get("canonicalize", False)))
    if kind == "first_order_polynomial":
        fs = _require(coeffs, "f", "/coefficients")
        if not isinstance(fs, list) or len(fs) < 2:
            raise SchemaError("need f_0 and f_1 (alpha = -f_{1,0} is undefined)", "/coefficients/f")
        seqs = []
        for p, node in enumerate(fs):
            vals = parse_list(node, f"/coefficients/f/{p}")
            seqs.append(CoeffSeq(vals, finite=finite))
        if len(seqs[1]) == 0:
            raise SchemaError("f_{1,0} is missing, so alpha is undefined", "/coefficients/f/1/0")
        kappa = parse_value(_require(doc, "kappa"), "/kappa")
        C_F = parse_value(doc.get("C_F", "1"), "/C_F")
        try:
            prob = FirstOrderProblem(tuple(seqs), kappa, _ray(doc), C_F, name)
        except AsxError as exc:
            msg = str(exc)
            if "kappa" in msg:
                pointer = "/kappa"
            elif "arg(" in msg:
                pointer = "/theta"
            else:
                pointer = "/coefficients/f"
            raise SchemaError(msg, pointer) from exc
        return LoadedProblem(kind, prob, name, doc.get("precision_bits"), reference)
    if kind == "model_series":
        c = parse_list(_require(coeffs, "c", "/coefficients"), "/coefficients/c")
        growth = doc.get("growth", {})
        g = {k: parse_value(v, f"/growth/{k}") for k, v in growth.items()}
        return LoadedProblem(kind, CoeffSeq(c, finite=finite), name, doc.get("precision_bits"),
                             reference, growth=g)
    # rational_inhom
    from .stokes import RationalFunction

    poles = parse_list(_require(doc, "poles"), "/poles")
    residues = _require(doc, "residues")
    if not isinstance(residues, list):
        raise SchemaError("residues must be a matrix", "/residues")
    rows = [parse_list(row, f"/residues/{k}") for k, row in enumerate(residues)]
    try:
        R = RationalFunction(tuple(poles), tuple(tuple(r) for r in rows))
    except ValueError as exc:
        raise SchemaError(str(exc), "/residues") from exc
    C = parse_value(doc.get("C", "0"), "/C")
    return LoadedProblem(kind, R, name, doc.get("precision_bits"), reference, C=C)


# -- tables --------------------------------------------------------------------------

def _expand(columns: Sequence[str], rows: Sequence[dict]) -> list[str]:
    """CSV header: complex-valued columns split into ``_re`` / ``_im``."""
    out = []
    for c in columns:
        if any(isinstance(r.get(c), mpc) for r in rows):
            out += [f"{c}_re", f"{c}_im"]
        else:
            out.append(c)
    return out


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    return mp.nstr(to_mp(v), CSV_DIGITS, min_fixed=0, max_fixed=0, strip_zeros=False) if to_mp(v) != 0 else "0"


def table_text(rows: Sequence[dict], fmt: str, columns: Optional[Sequence[str]] = None,
               meta: Optional[dict] = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    if fmt == "csv":
        header = _expand(columns, rows)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            cells = []
            for c in columns:
                v = r.get(c)
                if f"{c}_re" in header:
                    v = to_mp(v) if v is not None else mpf(0)
                    cells += [_csv_cell(mp.re(v)), _csv_cell(mp.im(v))]
                else:
                    cells.append(_csv_cell(v))
            w.writerow(cells)
        return buf.getvalue()
    if fmt == "json":
        out_rows = []
        for r in rows:
            out_rows.append({c: _json_value(r.get(c)) for c in columns})
        doc = {"kind": "table", "columns": list(columns), "rows": out_rows}
        if meta:
            doc.update(meta)
        return dump_json(doc)
    raise ValueError(f"unknown format {fmt!r}")


def _json_value(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, int):
        return v
    return render_scalar(v)


def emit_table(rows: Sequence[dict], fmt: str, path=None, columns: Optional[Sequence[str]] = None,
               meta: Optional[dict] = None) -> str:
    """Write rows as CSV (40 significant digits) or JSON (``[re, im]`` strings)."""
    text = table_text(rows, fmt, columns, meta)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# -- typed documents -------------------------------------------------------------------

def coefficients_doc(seq: CoeffSeq, name: str, bits: int, extra: Optional[dict] = None) -> dict:
    doc = {
        "kind": "coefficients",
        "problem": name,
        "precision_bits": bits,
        "exact": seq.exact,
        "finite": seq.finite,
        "coefficients": [render_scalar(c) for c in seq],
    }
    if extra:
        doc.update({k: render_scalar(v) if not isinstance(v, (str, int, list, dict)) else v
                    for k, v in extra.items()})
    return doc


def stokes_doc(report, bits: int) -> dict:
    return {
        "kind": "stokes_report",
        "precision_bits": bits,
        "ray": {"theta": render_real(report.ray.theta), "x0": render_real(report.ray.x0)},
        "C": render_scalar(report.C),
        "convergence_rate": render_real(report.convergence_rate),
        "spread": render_real(report.spread),
        "extrapolants": [render_scalar(v) for v in report.extrapolants],
        "samples": [{"x": render_scalar(x), "n": n, "E": render_scalar(e)} for x, n, e in report.samples],
    }


def decomposition_doc(d, bits: int, residual=None) -> dict:
    doc = {
        "kind": "decomposition",
        "precision_bits": bits,
        "K": render_scalar(d.K),
        "C": render_scalar(d.C),
        "H": [render_scalar(h) for h in d.H],
    }
    if residual is not None:
        doc["residual"] = render_real(residual)
    return doc


def load_output(path):
    """Re-load a JSON document written by the CLI into typed values."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    bits = doc.get("precision_bits") or DEFAULT_PRECISION
    with working_precision(bits):
        kind = doc.get("kind")
        if kind == "coefficients":
            return CoeffSeq([parse_value(v) for v in doc["coefficients"]], finite=doc.get("finite", False))
        if kind == "stokes_report":
            from .stokes import StokesReport

            ray = Ray(parse_value(doc["ray"]["theta"]), parse_value(doc["ray"]["x0"]))
            samples = [(parse_value(s["x"]), s["n"], parse_value(s["E"])) for s in doc["samples"]]
            return StokesReport(ray, parse_value(doc["C"]), samples, parse_value(doc["convergence_rate"]),
                                [parse_value(v) for v in doc["extrapolants"]], parse_value(doc["spread"]))
        if kind == "decomposition":
            from .stokes import DecompositionResult

            return DecompositionResult(parse_value(doc["K"]), CoeffSeq([parse_value(v) for v in doc["H"]]),
                                       parse_value(doc["C"]))
        if kind == "table":
            return [{c: parse_value(v) if isinstance(v, list) else v for c, v in r.items()}
                    for r in doc["rows"]]
    raise SchemaError(f"unknown output kind {doc.get('kind')!r}", "/kind")
