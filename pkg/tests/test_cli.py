import io
import json
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import pytest

from zpgrowth import cli
from zpgrowth.padic import direction_from_ints
from zpgrowth.series import PowerSeries1, PowerSeries2, PrecisionPolicy, project

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def run(*args):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main([str(a) for a in args])
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, doc, name="in.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_parse_minimal(tmp_path):
    L, cfg = cli.parse_input(write(tmp_path, {"p": 5, "series": [[0, 1, "1"], [1, 1, "1"]]}))
    X, Y = PowerSeries2.X(5, cfg.policy), PowerSeries2.Y(5, cfg.policy)
    assert L.series == Y + X * Y


@pytest.mark.parametrize("doc,needle", [
    ({"p": 4}, "p must be prime"),
    ({"p": 5, "directions": ["1:1", "0:0"]}, "directions[1]"),
    ({"p": 5, "series": [[0, 1, "3:x"]]}, "malformed coefficient"),
    ({"p": 5, "series": [[0, 1]]}, "series[0]"),
    ({"p": 5, "height": "big"}, "height"),
    ({"p": 5, "setting": {"sign": 0}}, "setting.sign"),
    ({"p": 5, "coeff_prec": 0}, "coeff_prec"),
])
def test_validation_names_field(tmp_path, doc, needle):
    with pytest.raises(cli.InputError) as exc:
        cli.parse_input(write(tmp_path, doc))
    assert needle in str(exc.value)


def test_error_exit_code(tmp_path):
    code, out, err = run("analyze", write(tmp_path, {"p": 4}))
    assert code == 1 and out == "" and "p must be prime" in err
    code, _, err = run("analyze", tmp_path / "missing.json")
    assert code == 1


def test_analyze_two_directions():
    code, out, _ = run("analyze", CORPUS / "analyze_two_directions.json")
    reports = json.loads(out)["reports"]
    assert code == 0 and len(reports) == 2
    assert all(r["nonvanishing"]["kind"] == "CERTIFIED" and r["predicted_c"] == 0
               for r in reports)


def test_weierstrass_command():
    code, out, _ = run("weierstrass", CORPUS / "weierstrass_5_plus_t.json")
    doc = json.loads(out)
    assert code == 0 and doc["mu"] == 0 and doc["lambda"] == 1
    assert doc["distinguished_residues"][0].startswith("5 + O(5^")
    assert doc["distinguished"][1] == "1"


def test_hypotheses_command_is_not_an_error():
    code, out, _ = run("hypotheses", CORPUS / "hypotheses_11_m4.json")
    doc = json.loads(out)
    assert code == 0 and doc["ghh_ok"] is False and doc["p_splits"] is True


def test_growth_table_command():
    code, out, _ = run("growth-table", CORPUS / "growth_table_t_phi5.json", "--nmax", 3)
    rows = json.loads(out)["rows"]
    assert code == 0
    assert [r["corank"] for r in rows] == [2, 10, 30, 130]
    assert [r["phi(p^n)"] for r in rows] == [1, 4, 20, 100]


def test_precision_starved_exit_two():
    code, out, _ = run("analyze", CORPUS / "precision_starved.json")
    assert code == 2
    assert all(r["torsion_verdict"] == "INDETERMINATE" for r in json.loads(out)["reports"])


def test_precision_flag_overrides(tmp_path):
    path = write(tmp_path, {"p": 5, "series": [[0, 1, "1"], [1, 1, "1"]], "directions": ["1:1"]})
    code, out, _ = run("project", path, "--precision", 6, "--degree-bound", 4)
    proj = json.loads(out)["projections"][0]
    assert code == 0 and proj["series"][0] == [1, 0, str(5**6 - 1)]


def test_project_roundtrip():
    code, out, _ = run("project", CORPUS / "analyze_y_one_plus_x.json")
    doc = json.loads(out)
    pol = PrecisionPolicy(20, 8)
    for entry in doc["projections"]:
        back = PowerSeries1.from_triples(5, pol, entry["series"])
        assert back.to_triples() == entry["series"]
        d = direction_from_ints(5, *map(int, entry["direction"].split(":")))
        L = PowerSeries2.from_triples(5, pol, [[0, 1, "1"], [1, 1, "1"]])
        assert project(L, d).to_triples() == entry["series"]


def test_table_output_columns():
    code, out, _ = run("analyze", CORPUS / "analyze_y_one_plus_x.json", "--output", "table")
    assert code == 0 and "p^n" in out and "phi(p^n)" in out


def test_oracle_command():
    code, out, _ = run("oracle", CORPUS / "oracle_pseudo_null.json")
    doc = json.loads(out)
    assert code == 0
    assert [r["oracle_rank"] for r in doc["corank_comparison"]] == [1, 5, 5]
    assert all(d["kernel_constant_in_n"] for m in doc["modules"] for d in m["directions"])


def test_exit_contract_and_determinism_on_corpus():
    expected = {
        "analyze_two_directions.json": ("analyze", 0),
        "analyze_y_one_plus_x.json": ("analyze", 0),
        "precision_starved.json": ("analyze", 2),
        "weierstrass_5_plus_t.json": ("weierstrass", 0),
        "growth_table_t_phi5.json": ("growth-table", 0),
        "hypotheses_11_m4.json": ("hypotheses", 0),
        "hypotheses_15_m11.json": ("hypotheses", 0),
        "oracle_pseudo_null.json": ("oracle", 0),
    }
    assert sorted(expected) == sorted(p.name for p in CORPUS.glob("*.json"))
    for name, (cmd, code) in expected.items():
        first, second = run(cmd, CORPUS / name), run(cmd, CORPUS / name)
        assert first == second
        assert first[0] == code, name


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "zpgrowth", "hypotheses",
                          str(CORPUS / "hypotheses_15_m11.json")],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["ghh_ok"] is True
