import json
from fractions import Fraction

import pytest
from mpmath import mp, mpf

from asx import CoeffSeq
from asx.cli import main
from asx.errors import SchemaError
from asx.formal import linear_series
from asx.io import (
    builtin_path,
    emit_table,
    load_output,
    load_problem,
    parse_value,
    problem_from_dict,
    render_scalar,
    resolve_precision,
)
from asx.models import airy_chain
from asx.stokes import DecompositionResult, StokesReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    return json.loads(err.strip().splitlines()[-1])


# -- precision and parsing -------------------------------------------------------------

def test_precision_precedence(monkeypatch):
    monkeypatch.delenv("ASX_PRECISION_BITS", raising=False)
    assert resolve_precision() == 256
    assert resolve_precision(file_bits=300) == 300
    monkeypatch.setenv("ASX_PRECISION_BITS", "400")
    assert resolve_precision(file_bits=300) == 400
    assert resolve_precision(flag=512, file_bits=300) == 512


def test_value_round_trip():
    assert parse_value("5/36") == Fraction(5, 36)
    assert parse_value(["1", "0"]) == 1
    z = parse_value(["0.5", "-2"])
    assert z == mp.mpc("0.5", "-2")
    assert parse_value(render_scalar(z)) == z
    with pytest.raises(SchemaError) as exc:
        parse_value({"re": 1}, "/x")
    assert exc.value.pointer == "/x"


def test_builtins_load():
    for name in ("ei", "airy", "h-equation"):
        lp = load_problem(builtin_path(name))
        assert lp.name == name


# -- schema errors carry JSON pointers ----------------------------------------------------

def ei_doc():
    return json.loads(builtin_path("ei").read_text())


@pytest.mark.parametrize("mutate, pointer", [
    (lambda d: d.pop("kappa"), "/kappa"),
    (lambda d: d.update(kind="quartic"), "/kind"),
    (lambda d: d.update(precision_bits=8), "/precision_bits"),
    (lambda d: d["coefficients"]["f"].__setitem__(1, []), "/coefficients/f/1/0"),
    (lambda d: d["coefficients"]["f"][0].__setitem__(1, "one"), "/coefficients/f/0/1"),
])
def test_schema_pointers(mutate, pointer):
    doc = ei_doc()
    mutate(doc)
    with pytest.raises(SchemaError) as exc:
        problem_from_dict(doc)
    assert exc.value.pointer == pointer


def test_cli_reports_schema_error(tmp_path, capsys):
    doc = ei_doc()
    doc["kappa"] = "3"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "solve", "--problem", str(path))
    assert code == 2
    e = error_of(err)
    assert e["pointer"] == "/kappa" and set(e) == {"code", "message", "pointer"}


# -- tables ---------------------------------------------------------------------------------

def test_empty_rows_give_header_only_csv(tmp_path):
    path = tmp_path / "t.csv"
    emit_table([], "csv", path, columns=["n", "c"])
    assert path.read_text() == "n,c\n"


def test_csv_splits_complex_columns():
    text = emit_table([{"n": 1, "v": mp.mpc(1, 2)}], "csv")
    header, row = text.strip().splitlines()
    assert header == "n,v_re,v_im"
    assert row.startswith("1,1.0")


# -- subcommands ----------------------------------------------------------------------------

def test_solve_airy_gives_exact_rationals(tmp_path, capsys):
    out = tmp_path / "c.json"
    code, _, _ = run(capsys, "solve", "--builtin", "airy", "--terms", "200", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["exact"] and all("." not in re and im == "0" for re, im in doc["coefficients"])
    seq = load_output(out)
    p, _ = airy_chain()
    assert list(seq) == list(linear_series(p, 200))


def test_solve_is_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"ei{k}.csv"
        assert run(capsys, "solve", "--builtin", "ei", "--terms", "30", "--format", "csv", "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[:2] == ["n,c", "0,0"]
    # 40 significant digits
    cell = dict(line.split(",") for line in lines[1:])["6"]
    assert mpf(cell) == 120 and len(cell.split("e")[0].replace(".", "")) == 40


def test_stokes_ei_on_upper_ray(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "stokes", "--builtin", "ei", "--theta", "1.0472", "--out", str(out))
    assert code == 0
    rep = load_output(out)
    assert isinstance(rep, StokesReport)
    assert abs(rep.C - 1j * mp.pi) < 1e-3


def test_stokes_non_convergence_exit_code(capsys):
    code, _, err = run(capsys, "stokes", "--builtin", "ei", "--theta", "0.3", "--tol", "1e-12")
    assert code == 1 and error_of(err)["code"] == "non_convergence"


def test_sum_table_round_trip(tmp_path, capsys):
    out = tmp_path / "sum.json"
    code, _, _ = run(capsys, "sum", "--builtin", "ei", "--x", "10", "20", "--out", str(out))
    assert code == 0
    rows = load_output(out)
    assert [r["n_x"] for r in rows] == [10, 20]
    for r in rows:
        assert r["error"] < r["bound"]


def test_decompose_round_trip(tmp_path, capsys):
    prob = tmp_path / "r.json"
    prob.write_text(json.dumps({"kind": "rational_inhom", "name": "two-poles",
                                "poles": ["0", "1"], "residues": [["1", "2"]]}))
    out = tmp_path / "d.json"
    code, _, _ = run(capsys, "decompose", "--problem", str(prob), "--grid", "20,30", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert mpf(doc["residual"]) < mpf(10) ** -60
    d = load_output(out)
    assert isinstance(d, DecompositionResult) and isinstance(d.H, CoeffSeq)
    assert abs(d.K - (1 + 2 * mp.e)) < mpf(10) ** -60


def test_decompose_needs_rational_problem(capsys):
    code, _, err = run(capsys, "decompose", "--builtin", "ei")
    assert code == 2 and error_of(err)["code"] == "usage"


def test_weight_plot_is_written(tmp_path, capsys):
    png = tmp_path / "w.png"
    code, out, _ = run(capsys, "weight", "--builtin", "ei", "--kmax", "5", "--grid", "20",
                       "--format", "csv", "--plot", str(png), "--prec", "128")
    assert code == 0 and png.stat().st_size > 0
    assert out.splitlines()[0] == "n,w" and len(out.splitlines()) == 6


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "solve")[0] == 2
    assert run(capsys, "solve", "--builtin", "ei", "--problem", "x.json")[0] == 2
    assert run(capsys, "stokes", "--builtin", "ei", "--schedule", "60:20:5")[0] == 2


def test_missing_file_is_io_error(capsys):
    code, _, err = run(capsys, "solve", "--problem", "/nonexistent/p.json")
    assert code == 1 and error_of(err)["code"] == "io"


def test_verify_quick_suite(tmp_path, capsys):
    table = tmp_path / "v.csv"
    code, out, _ = run(capsys, "verify", "--suite", "quick", "--out", str(table), "--format", "csv",
                       "--plot-dir", str(tmp_path / "figs"))
    assert code == 0
    assert out.strip().splitlines()[-1] == "4/4 checks passed"
    assert table.read_text().splitlines()[0] == "criterion,name,passed,seconds,detail"
    assert (tmp_path / "figs" / "remainder_law.png").exists()
    assert (tmp_path / "figs" / "sup_statistic.png").exists()
