import csv
import io
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from coherence_kit import harness, quantum
from coherence_kit.cli import run


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


@pytest.fixture
def qubit(tmp_path):
    plus = quantum.state_to_json(np.full((2, 2), 0.5))
    return {
        "structure": write(tmp_path, "qubit01.json", {"dim": 2, "generators": [[0, 1]]}),
        "plus": write(tmp_path, "plus.json", plus),
    }


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("cls", harness.CHANNEL_CLASSES)
def test_sample_then_classify_round_trip(tmp_path, capsys, cls):
    for seed in range(20):
        path = str(tmp_path / f"{cls}{seed}.json")
        assert run(["sample", "--class", cls, "--dim", "4", "--seed", str(seed), "-o", path]) == 0
        expect = "incoherent_given_kraus" if cls == "incoherent" else cls
        assert run(["classify", "--channel", path, "--expect", expect]) == 0
        assert out_json(capsys)[expect] is True


def test_classify_with_structure_file(tmp_path, qubit, capsys):
    ch = write(tmp_path, "pm_channel.json", harness.measure_pm_channel().to_json())
    assert run(["classify", "--channel", ch, "--structure", qubit["structure"]]) == 0
    rep = out_json(capsys)
    assert (rep["tc"], rep["dc"], rep["ip"], rep["incoherent_given_kraus"]) == (False, False, True, True)
    assert run(["classify", "--channel", ch, "--structure", qubit["structure"], "--expect", "dc"]) == 2


def test_classify_unitary_and_povm(tmp_path, qubit, capsys):
    u = write(tmp_path, "x.json", {"matrix": quantum.matrix_to_json(np.array([[0, 1], [1, 0]]))})
    assert run(["classify", "--unitary", u, "--structure", qubit["structure"], "--expect", "dc,ip"]) == 0
    assert out_json(capsys)["tc"] is False
    pm = quantum.Povm((quantum.Effect(np.full((2, 2), 0.5)), quantum.Effect(np.array([[0.5, -0.5], [-0.5, 0.5]]))))
    p = write(tmp_path, "pm.json", quantum.povm_to_json(pm))
    assert run(["classify", "--povm", p, "--structure", qubit["structure"], "--expect", "ip"]) == 0
    assert out_json(capsys)["dc"] is False


def test_measure_gamma_plus(qubit, capsys):
    assert run(["measure", "--state", qubit["plus"], "--structure", qubit["structure"], "--measure", "gamma"]) == 0
    doc = out_json(capsys)
    assert doc["value"] == pytest.approx(math.log(2), abs=1e-11)
    assert doc["value"] == float(f"{math.log(2):.12g}")


def test_measure_many_and_files(tmp_path, qubit, capsys):
    lin = write(tmp_path, "lin.json", {"coefficients": [[-1, 1], [1, 1]]})
    dist = write(tmp_path, "p.json", {"atoms": [[0, 0.5], [3.141592653589793, 0.5]]})
    argv = ["measure", "--state", qubit["plus"], "--structure", qubit["structure"], "--dist", dist]
    for m in ("wyd:0.5", "fl", "r", "rp", f"linmode:{lin}", "nmr:1", "gamma_q:0.5", "renyi:0.5", "mode:1", "gamma_p"):
        argv += ["--measure", m]
    assert run(argv) == 0
    vals = {d["measure"]: d["value"] for d in out_json(capsys)}
    assert vals["wyd:0.5"] == pytest.approx(0.25)
    assert vals["fl"] == vals["r"] == vals[f"linmode:{lin}"] == pytest.approx(1.0)
    assert vals["rp"] == pytest.approx(1.0)
    assert vals["gamma_p"] == pytest.approx(math.log(2))


def test_modes_table(tmp_path, capsys):
    s = write(tmp_path, "s.json", {"dim": 3, "generators": [[0, 1, 2]]})
    psi = np.array([1, 0, 1]) / math.sqrt(2)
    st = write(tmp_path, "st.json", quantum.state_to_json(np.outer(psi, psi)))
    assert run(["modes", "--state", st, "--structure", s]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["omega"] for r in rows] == ["-2", "-1", "0", "1", "2"]
    by = {r["omega"]: r for r in rows}
    assert float(by["2"]["trace_norm"]) == pytest.approx(0.5) and float(by["-2"]["trace_norm"]) == pytest.approx(0.5)
    assert float(by["1"]["frobenius"]) == 0.0
    for r in rows:
        assert float(r["frobenius"]) <= float(r["trace_norm"]) + 1e-12 <= float(r["sqrt_d_frobenius"]) + 2e-12
    assert run(["modes", "--state", st, "--structure", s, "--format", "json"]) == 0
    assert len(out_json(capsys)) == 5


def test_sweep_csv_and_expect(tmp_path, capsys):
    rep = str(tmp_path / "rep.json")
    assert run(["sweep", "--measure", "wyd:0.5", "--class", "dc", "--trials", "6", "--dim", "3", "--report", rep, "--expect", "violated"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "trial,f_before,f_after,violation" and lines[1] == "0,0.25,1,0.75" and len(lines) == 7
    assert json.loads(open(rep).read())["witness"]["trial"] == 0
    assert run(["sweep", "--measure", "wyd:0.5", "--class", "dc", "--trials", "6", "--dim", "3", "--expect", "monotone"]) == 2


def test_demo(capsys):
    assert run(["demo", "inclusions"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


@pytest.mark.parametrize(
    "argv, needle",
    [
        ([], "subcommand"),
        (["classify"], "exactly one"),
        (["classify", "--channel", "missing.json"], "missing.json"),
        (["measure", "--state", "missing.json", "--measure", "gamma"], "--state"),
        (["sweep", "--measure", "gamma", "--class", "tc", "--trials", "0", "--dim", "2"], "--trials"),
        (["sweep", "--measure", "gamma", "--class", "nope", "--dim", "2"], "--class"),
        (["sweep", "--measure", "bogus", "--class", "tc", "--dim", "2"], "--measure"),
        (["sample", "--dim", "3", "--tol", "-1"], "--tol"),
        (["sample", "--class", "tc"], "--dim"),
        (["frobnicate"], "invalid choice"),
    ],
)
def test_validation_errors_exit_1(argv, needle, capsys):
    assert run(argv) == 1
    assert needle in capsys.readouterr().err


def test_bad_json_files(tmp_path, qubit, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["measure", "--state", str(bad), "--structure", qubit["structure"], "--measure", "gamma"]) == 1
    assert "bad.json" in capsys.readouterr().err
    notstate = write(tmp_path, "ns.json", quantum.state_to_json(np.diag([1.0, 1.0])))
    assert run(["measure", "--state", notstate, "--structure", qubit["structure"], "--measure", "gamma"]) == 1
    s3 = write(tmp_path, "s3.json", {"dim": 3, "generators": [[0, 1, 2]]})
    assert run(["measure", "--state", qubit["plus"], "--structure", s3, "--measure", "gamma"]) == 1
    assert "dim" in capsys.readouterr().err


def test_outputs_readable_by_toolkit(tmp_path):
    for obj, reader in (("state", quantum.state_from_json), ("povm", quantum.povm_from_json), ("channel", quantum.channel_from_json)):
        path = tmp_path / f"{obj}.json"
        assert run(["sample", "--object", obj, "--dim", "3", "-o", str(path)]) == 0
        reader(json.loads(path.read_text()))
    path = tmp_path / "u.json"
    assert run(["sample", "--object", "unitary", "--dim", "3", "-o", str(path)]) == 0
    quantum.check_unitary(quantum.matrix_from_json(json.loads(path.read_text())["matrix"]))


@pytest.mark.skipif(shutil.which("coherence-kit") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["coherence-kit", "demo"], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
