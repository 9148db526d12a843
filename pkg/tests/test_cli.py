import io
import json
import subprocess
import sys

import pytest

from maltsev_csp.algebra import affine_op, majority_op
from maltsev_csp.cli import main
from maltsev_csp.instance import make_instance


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p

    return write


@pytest.fixture
def sat_dir(tmp_path):
    d = tmp_path / "sat"
    assert run("gen", "--family", "lin_p", "--p", 3, "--n", 5, "--m", 6, "--seed", 4, "--out", d)[0] == 0
    return d


@pytest.fixture
def unsat_dir(tmp_path):
    d = tmp_path / "unsat"
    assert run("gen", "--family", "lin_p", "--p", 2, "--n", 4, "--m", 5, "--seed", 4, "--unsat", "--out", d)[0] == 0
    return d


def test_gen_writes_files(sat_dir):
    manifest = json.loads((sat_dir / "manifest.json").read_text())
    assert manifest["seed"] == 4 and manifest["satisfiable"] and len(manifest["planted"]) == 5
    assert (sat_dir / "instance.json").exists() and (sat_dir / "algebra.json").exists()


def test_solve_sat(sat_dir):
    code, text = run("solve", "--instance", sat_dir / "instance.json", "--algebra", sat_dir / "algebra.json")
    lines = text.splitlines()
    assert code == 0 and lines[0] == "SAT" and len(json.loads(lines[1])) == 5


def test_solve_unsat_then_check(unsat_dir, tmp_path):
    cert = tmp_path / "cert.json"
    args = ["--instance", unsat_dir / "instance.json", "--algebra", unsat_dir / "algebra.json", "--cert", cert]
    code, text = run("solve", *args)
    assert code == 1 and text.startswith("UNSAT m=")
    assert run("check", *args) == (0, "ACCEPT\n")
    data = json.loads(cert.read_text())
    item = data["reps"][1][0]
    item["map"][0] = 1 - item["map"][0]
    cert.write_text(json.dumps(data))
    code, text = run("check", *args)
    assert code == 1 and text.startswith("REJECT step 1:")


def test_solve_gmm_flag(unsat_dir, tmp_path):
    cert = tmp_path / "g.json"
    args = ["--instance", unsat_dir / "instance.json", "--algebra", unsat_dir / "algebra.json", "--cert", cert]
    assert run("solve", "--gmm", *args)[0] == 1
    assert json.loads(cert.read_text())["mode"] == "gmm"
    assert run("check", *args)[0] == 0


def test_json_output_is_deterministic(unsat_dir, tmp_path):
    args = ["--instance", unsat_dir / "instance.json", "--algebra", unsat_dir / "algebra.json", "--json"]
    first = run("solve", *args, "--cert", tmp_path / "a.json")
    second = run("solve", *args, "--cert", tmp_path / "a.json")
    assert first == second
    assert json.loads(first[1])["verdict"] == "unsat"
    assert run("oracle", *args) == run("oracle", *args)


def test_validate_algebra(files):
    mal = files("mal.json", affine_op(3).dumps())
    maj = files("maj.json", majority_op(2).dumps())
    code, text = run("validate-algebra", "--algebra", mal)
    assert code == 0 and "maltsev: yes" in text and "{0,1} minority" in text
    assert run("validate-algebra", "--algebra", maj)[0] == 2
    code, text = run("validate-algebra", "--algebra", maj, "--gmm", "--json")
    assert code == 0 and [0, 1, "majority"] in json.loads(text)["pairs"]


def test_oracle_command(files):
    inst = files("i.json", make_instance(2, 2, None, [(0, 1, [(0, 0), (1, 1)])]).dumps())
    code, text = run("oracle", "--instance", inst)
    assert code == 0 and text.splitlines()[0] == "solutions 2"
    empty = files("e.json", make_instance(2, 2, [[0], [1]], [(0, 1, [])]).dumps())
    assert run("oracle", "--instance", empty)[0] == 1
    assert run("oracle", "--instance", inst, "--budget", 2)[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["solve"],
        ["solve", "--instance", "/nonexistent.json", "--algebra", "/nonexistent.json"],
        ["gen", "--family", "lin_p", "--p", 1, "--out", "/tmp/never"],
        ["gen", "--family", "lin_p"],
        ["solve", "--budget", "many"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert run(*argv)[0] == 2
    assert capsys.readouterr().err


def test_bad_inputs_exit_2(files, capsys):
    inst = files("i.json", '{"n": 2')
    alg = files("a.json", affine_op(2).dumps())
    assert run("solve", "--instance", inst, "--algebra", alg)[0] == 2
    assert "bad instance" in capsys.readouterr().err
    bad = files("b.json", make_instance(2, 2, None, [(0, 1, [(0, 0), (0, 1), (1, 1)])]).dumps())
    assert run("solve", "--instance", bad, "--algebra", alg)[0] == 2
    maj = files("m.json", majority_op(2).dumps())
    ok = files("o.json", make_instance(2, 2, None, []).dumps())
    assert run("solve", "--instance", ok, "--algebra", maj)[0] == 2


def test_module_entry_point(sat_dir):
    cmd = [sys.executable, "-m", "maltsev_csp", "solve", "--json",
           "--instance", str(sat_dir / "instance.json"), "--algebra", str(sat_dir / "algebra.json")]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.returncode == 0 and a.stdout == b.stdout
    assert json.loads(a.stdout)["verdict"] == "sat"
