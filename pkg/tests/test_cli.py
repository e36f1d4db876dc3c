import io
import subprocess
import sys
from pathlib import Path

import pytest

from fixlog.cli import run
from fixlog.model import free_vars
from fixlog.syntax import parse_formula_file, parse_program_file

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def sample(name):
    return SAMPLES / name


def test_eval_program_path():
    code, out, _ = cli("eval-program", sample("path.dl"), sample("chain.struct"))
    assert code == 0 and out == "path = {(0,1),(0,2),(1,2)}\n"


def test_eval_program_trace():
    code, out, _ = cli("eval-program", sample("path.dl"), sample("chain.struct"), "--trace")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "stage 0: path = {}"
    assert lines[-1] == "path = {(0,1),(0,2),(1,2)}"


def test_eval_formula_prime():
    code, out, _ = cli("eval-formula", sample("prime.efpl"), sample("clamparith200.struct"), "--val", "X=7")
    assert (code, out) == (0, "true\n")


def test_eval_formula_false_exit():
    code, out, _ = cli("eval-formula", sample("prime.efpl"), sample("clamparith20.struct"), "--val", "X=9")
    assert (code, out) == (1, "false\n")


def test_eval_formula_free():
    code, out, _ = cli("eval-formula", sample("search.efpl"), sample("succ6.struct"), "--free")
    assert (code, out) == (0, "{(0),(1),(2),(3)}\n")


def test_eval_formula_missing_value():
    code, _, err = cli("eval-formula", sample("search.efpl"), sample("succ6.struct"))
    assert code == 4 and "X" in err


def test_to_program_header_and_reparse():
    code, out, _ = cli("to-program", sample("search.efpl"))
    assert code == 0 and out.startswith("distinguished: Q_g0(X)\n")
    pf = parse_program_file(out, allow_reserved=True)
    assert pf.distinguished.pred == "Q_g0"


def test_to_formula_reparses():
    code, out, _ = cli("to-formula", sample("path.dl"), "--target", "path")
    assert code == 0
    f, v = parse_formula_file(out, allow_reserved=True)
    assert v.is_negatable("edge") and v.arity("edge") == 2
    assert sorted(free_vars(f)) == ["X_g0", "X_g1"]


def test_to_formula_unknown_target():
    code, _, err = cli("to-formula", sample("path.dl"), "--target", "edge")
    assert code == 2 and "edge" in err


def test_normalize_reparses():
    code, out, _ = cli("normalize", sample("prime.efpl"))
    assert code == 0
    parse_formula_file(out, allow_reserved=True)


def test_generated_output_needs_flag(tmp_path):
    _, out, _ = cli("to-program", sample("search.efpl"))
    path = tmp_path / "q.dl"
    path.write_text(out)
    code, _, err = cli("check", path)
    assert code == 2 and "ReservedPrefixUsed" in err
    assert cli("check", path, "--allow-reserved")[:2] == (0, "ok\n")


def test_eval_translated_program(tmp_path):
    _, out, _ = cli("to-program", sample("search.efpl"))
    path = tmp_path / "q.dl"
    path.write_text(out)
    code, text, _ = cli("eval-program", path, sample("succ6.struct"), "--allow-reserved")
    assert code == 0 and "Q_g0 = {(0),(1),(2),(3)}" in text.splitlines()


def test_check_files():
    for name in ("path.dl", "prime.efpl", "search.efpl", "chain.struct"):
        assert cli("check", sample(name))[:2] == (0, "ok\n"), name


def test_check_reports_span(tmp_path):
    bad = tmp_path / "bad.efpl"
    bad.write_text("vocabulary:\n  pos q/1.\n!q(X)\n")
    code, _, err = cli("check", bad)
    assert code == 2 and "NegationOfPositive" in err and ":3:" in err


def test_to_program_negation_of_positive(tmp_path):
    bad = tmp_path / "bad.efpl"
    bad.write_text("vocabulary:\n  pos q/1.\n!q(X)\n")
    code, out, err = cli("to-program", bad)
    assert code == 2 and out == "" and "NegationOfPositive" in err


def test_syntax_error(tmp_path):
    bad = tmp_path / "bad.efpl"
    bad.write_text("p(X,\n")
    code, _, err = cli("check", bad)
    assert code == 2 and "SyntaxError" in err


def test_usage_errors(tmp_path):
    assert cli()[0] == 4
    assert cli("frobnicate")[0] == 4
    assert cli("check", tmp_path / "missing.dl")[0] == 4
    assert cli("check", tmp_path)[0] == 4
    assert cli("eval-formula", sample("search.efpl"), sample("succ6.struct"), "--val", "X")[0] == 4
    assert cli("fuzz", "--max-universe", "0")[0] == 4


def test_fuzz_ok():
    code, out, _ = cli("fuzz", "--seed", 1, "--trials", 5)
    assert code == 0
    assert out.splitlines() == [f"{n}: ok (5 trials, seed 1)"
                                for n in ("program-to-formula", "formula-to-program", "homomorphism")]


def test_fuzz_mutant():
    code, out, _ = cli("fuzz", "--seed", 0, "--trials", 50, "--check", "program", "--mutant", "dropped-disjunct")
    assert code == 3 and "DISCREPANCY at trial" in out


def test_fuzz_seed_from_environment(monkeypatch):
    monkeypatch.setenv("FIXLOG_SEED", "17")
    code, out, _ = cli("fuzz", "--trials", 2, "--check", "program")
    assert code == 0 and "seed 17" in out
    monkeypatch.setenv("FIXLOG_SEED", "x")
    assert cli("fuzz", "--trials", 2)[0] == 4


def test_byte_identical_subprocess():
    argv = [sys.executable, "-m", "fixlog", "to-formula", str(sample("path.dl")), "--target", "path"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"vocabulary:")


@pytest.mark.parametrize("argv", [
    ("eval-program", "path.dl", "chain.struct", "--trace"),
    ("to-program", "prime.efpl"),
    ("normalize", "prime.efpl"),
])
def test_deterministic_output(argv):
    args = [sample(a) if "." in a else a for a in argv]
    assert cli(*args) == cli(*args)
