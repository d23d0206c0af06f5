import json
import subprocess
import sys

import pytest

from tcalc.cli import _dims, main, run_suite


@pytest.fixture
def tc(tmp_path):
    def write(text, name="in.tc"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_canon_identical_for_equivalent_inputs(tc, capsys):
    main(["canon", tc("contr(Rm[i,j,k,l] Ric[i,k] Ric[j,l])\n")])
    a = capsys.readouterr().out
    main(["canon", tc("contr(Ric[b,d] Rm[c,d,a,b] Ric[a,c])\n")])
    b = capsys.readouterr().out
    assert a == b and a.strip()


def test_canon_with_n(tc, capsys):
    assert main(["canon", "--n", "8", tc("contr(Lap^[n/2-1] R)\n")]) == 0
    assert capsys.readouterr().out.strip() == "contr(D[a,a,b,b,c,c] R)"


def test_syntax_error_exit_code(tc, capsys):
    assert main(["canon", tc("contr(W[i,j])\n")]) == 2
    assert "tcalc:" in capsys.readouterr().err


def test_missing_file(capsys):
    assert main(["canon", "/nonexistent/x.tc"]) == 2


def test_stats(tc, capsys):
    main(["stats", tc("contr(D[a,b] Ric[a,b] R)\n")])
    (row,) = json.loads(capsys.readouterr().out)
    assert (row["sigma"], row["delta"], row["weight"]) == (2, 5, -6)


def test_rewrite_list(capsys):
    assert main(["rewrite", "--list"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert "cotton_identity" in m


def test_rewrite_rule(tc, capsys):
    assert main(["rewrite", "--rule", "schouten_to_ricci", tc("contr(P[a,b] P[a,b])\n")]) == 0
    out = capsys.readouterr().out
    assert "Ric" in out and "P[" not in out
    assert main(["rewrite", "--rule", "nope", tc("contr(R)\n")]) == 2


def test_divergence(tc, capsys):
    assert main(["divergence", "--eliminate", tc("contr(D[a,a] psi1 psi2)\n")]) == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["remainder"] == "- contr(D[a] psi1 D[a] psi2)"
    assert len(cert["steps"]) == 1


def test_ibp(tc, capsys):
    assert main(["ibp", "--psi", "1", tc("contr(D[a] psi1 D[a] psi2)\n")]) == 0
    assert capsys.readouterr().out.strip() == "- contr(psi1 D[a,a] psi2)"


def test_ambient(tmp_path, capsys):
    out = tmp_path / "amb.json"
    assert main(["ambient", "--n", "10", "--json", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["net_constant"] == "1/98"
    assert "1/98" in capsys.readouterr().err
    assert main(["ambient", "--n", "9"]) == 2


def test_numcheck(tc, capsys):
    f = tc("contr(Rm[a,b,c,d] Rm[a,b,c,d]) - 2*contr(Rm[a,b,c,d] Rm[a,c,b,d])\n")
    assert main(["numcheck", "--n", "5", "--grade", "2", "--jets", "2", f]) == 0
    assert main(["numcheck", "--n", "5", "--grade", "2", tc("contr(R R)\n", "b.tc")]) == 1


def test_verify_empty_is_vacuous_pass(capsys):
    assert main(["verify", "--suite", "empty"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert all(d["verdict"] == "PASS" for d in rep["dims"])


def test_verify_sigma1(capsys):
    assert main(["verify", "--suite", "sigma1", "--n", "8"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert [d["n"] for d in rep["dims"]] == [8]


def test_verify_unknown_suite(capsys):
    assert main(["verify", "--suite", "no-such-suite"]) == 2


def test_verify_list(capsys):
    assert main(["verify", "--list"]) == 0
    names = [line.split(":")[0] for line in capsys.readouterr().out.splitlines()]
    assert "ambient" in names and "weyl-norm" in names


def test_dimension_lists():
    assert _dims("10..16") == [10, 12, 14, 16]
    assert _dims("6, 8") == [6, 8]
    assert _dims(None) is None
    rep = run_suite("sigma1", _dims("6..8"), workers=1)
    assert [d["n"] for d in rep["dims"]] == [6, 8]


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["ambient"])
    assert e.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "tcalc", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
