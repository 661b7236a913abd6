import json

import pytest

from paplang.cli import main


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip(), out.err


def test_check(capsys):
    assert cli(capsys, "check", "examples/factorial.pap") == (0, "R -> R", "")
    assert cli(capsys, "check", "gaussian")[:2] == (0, "M R")


def test_run(capsys):
    assert cli(capsys, "run", "examples/factorial.pap", "--arg", "3", "--fuel", "10")[:2] == (0, "Halt 6")
    code, out, _ = cli(capsys, "run", "factorial", "--arg", "3", "--fuel", "2")
    assert code == 2 and out.startswith("Bottom FuelExhausted")
    code, out, _ = cli(capsys, "--json", "run", "pair_swap", "--arg", "(1, 2)")
    assert code == 0 and json.loads(out) == {"halted": True, "outcome": "Halt (2, 1)", "value": [2.0, 1.0]}


def test_static_errors_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.pap"
    bad.write_text("lam x : R. y")
    assert cli(capsys, "check", str(bad))[0] == 1
    bad.write_text("lam x : R. x +")
    assert cli(capsys, "check", str(bad))[0] == 1
    bad.write_text("lam x : R. if ((x, x) > 0) x x")
    assert cli(capsys, "run", str(bad), "--arg", "1")[0] == 1
    assert cli(capsys, "check", str(tmp_path / "missing.pap"))[0] == 1


def test_runtime_bottom_exits_two(capsys):
    assert cli(capsys, "run", "log_partial", "--arg", "0")[0] == 2
    assert cli(capsys, "diff", "loop_negative", "--at", "-1", "--dir", "1", "--fuel", "8")[0] == 2


def test_diff(capsys):
    code, out, _ = cli(capsys, "--json", "diff", "factorial", "--at", "3", "--dir", "1")
    assert code == 0 and json.loads(out) == {"primal": [6.0], "tangent": [11.0]}
    code, out, _ = cli(capsys, "--json", "diff", "identity_branches", "--at", "0")
    assert json.loads(out) == {"primal": [0.0], "jacobian": [[0.0]]}
    code, out, _ = cli(capsys, "diff", "square", "--emit")
    assert code == 0 and "mul_D" in out


def test_oracle(capsys):
    code, out, _ = cli(capsys, "oracle", "relu", "--points", "100")
    rep = json.loads(out)
    assert code == 0 and rep["failed"] == 0 and rep["passed"] + rep["boundary"] == 100
    code, out, _ = cli(capsys, "oracle", "relu", "--rep")
    assert code == 0 and "x1 > 0" in out


def test_oracle_is_seeded(capsys):
    a = cli(capsys, "--seed", "3", "oracle", "sin_relu_shift", "--points", "50")[1]
    b = cli(capsys, "--seed", "3", "oracle", "sin_relu_shift", "--points", "50")[1]
    assert a == b


def test_density(capsys):
    code, out, _ = cli(capsys, "--json", "density", "gaussian", "--trace", "0.3", "--grad")
    d = json.loads(out)
    assert code == 0 and d["density"] == pytest.approx(0.9139311852712282, abs=0) and len(d["gradient"]) == 1
    assert json.loads(cli(capsys, "--json", "density", "gaussian", "--trace", "0.3,0.4")[1]) == {"density": 0.0}
    assert cli(capsys, "density", "gaussian", "--trace", "0.3")[1] == "density 0.9139311852712282"


def test_density_negative_score_exits_two(capsys, tmp_path):
    p = tmp_path / "neg.pap"
    p.write_text("prob { x <- sample; score (0 - x); return x }")
    assert cli(capsys, "density", str(p), "--trace", "0.5")[0] == 2


def test_cov(capsys):
    out = cli(capsys, "--json", "cov", "piecewise_linear", "--mu", "uniform:-1,1", "--at", "1.0")[1]
    assert json.loads(out) == {"density": 0.25}
    assert cli(capsys, "cov", "piecewise_linear", "--at", "9")[0] == 2


def test_cov_verify_is_reproducible(capsys):
    args = ("cov-verify", "piecewise_linear", "--samples", "4000", "--bins", "10")
    a = cli(capsys, *args)[1]
    b = cli(capsys, *args)[1]
    assert a == b
    rep = json.loads(a)
    assert set(rep) == {"tv_distance", "samples", "dropped", "singular", "off_support", "per_bin"}


def test_corpus_subset(capsys):
    code, out, _ = cli(capsys, "corpus", "--only", "4,7")
    assert code == 0
    assert out.splitlines()[-1] == "2/2 criteria passed"
    code, out, _ = cli(capsys, "--json", "corpus", "--only", "7")
    assert json.loads(out)[0]["ok"] is True


def test_fuel_default_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("PAPLANG_FUEL_DEFAULT", "2")
    assert cli(capsys, "run", "factorial", "--arg", "3")[0] == 2
