import io
import json

import pytest

from coiso.cli import main
from coiso.io import dumps


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path, capsys):
    paths = {}
    for model in ("rotor", "nonflat", "weak"):
        p = tmp_path / f"{model}.json"
        assert main(["gen", model, "--out", str(p)]) == 0
        paths[model] = str(p)
    capsys.readouterr()
    return paths


def test_gen_matches_goldens(files, golden):
    for model, name in (("rotor", "rotor.json"), ("nonflat", "nonflat.json"), ("weak", "weak_flat.json")):
        with open(files[model]) as fh:
            assert json.loads(fh.read()) == json.loads((golden / name).read_text())


def test_check_exit_codes(files, capsys, tmp_path):
    assert run(capsys, "check", files["rotor"])[0] == 0
    bad = tmp_path / "bad.json"
    bad.write_text('{"chart": ["x"], "omega": {"kind": "constant", "matrix": [["0"]]}, "H": []')
    code, _, err = run(capsys, "check", str(bad))
    assert code == 2 and "line" in err
    assert run(capsys, "check", str(tmp_path / "missing.json"))[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_stage_composition_through_files(files, capsys, tmp_path):
    t, l = tmp_path / "t.json", tmp_path / "l.json"
    assert main(["thicken", files["rotor"], "--out", str(t)]) == 0
    assert main(["lift", str(t), "--out", str(l)]) == 0
    lifted = json.loads(l.read_text())
    assert lifted["format"] == "thickened" and lifted["report"]["passed"]
    capsys.readouterr()
    code, out, _ = run(capsys, "lagrangian", str(l))
    data = json.loads(out)
    assert code == 0 and data["report"]["passed"]
    code, out, _ = run(capsys, "gnh", str(l), "--format", "text")
    assert code == 0 and out.startswith("dims")


def test_stdin_pipe(files, capsys, monkeypatch):
    with open(files["rotor"]) as fh:
        spec = fh.read()
    code, out, _ = run(capsys, "thicken", "--format", "text", stdin=spec, monkeypatch=monkeypatch)
    assert code == 0 and "omega_tilde = dx^dy - dz^dmu_1" in out


def test_nonflat_and_weak(files, capsys):
    code, out, _ = run(capsys, "lift", files["nonflat"])
    assert code == 1 and not json.loads(out)["report"]["passed"]
    assert run(capsys, "pipeline", files["weak"])[0] == 0


def test_pipeline_golden_and_determinism(golden, capsys, monkeypatch):
    monkeypatch.chdir(golden)
    code, a, _ = run(capsys, "pipeline", "rotor.json")
    _, b, _ = run(capsys, "pipeline", "rotor.json")
    assert code == 0 and a == b
    assert a == (golden / "rotor_report.json").read_text()


def test_connection_flag_halts(golden, capsys, monkeypatch):
    monkeypatch.chdir(golden)
    code, out, _ = run(capsys, "pipeline", "--connection", "nonflat_connection.json", "rotor.json")
    assert code == 1
    status = {s["stage"]: s["status"] for s in json.loads(out)["stages"]}
    assert status["lift"] == "fail" and status["simulation"] == "skip"


def test_maxwell_generation_and_simulation(capsys, tmp_path, monkeypatch):
    amb = tmp_path / "amb.json"
    code, spec, _ = run(capsys, "gen", "maxwell", "--n", "2", "--ambient", str(amb))
    assert code == 0 and json.loads(spec)["format"] == "linear_quadratic"
    assert json.loads(amb.read_text())["N"] == 2
    code, out, _ = run(capsys, "pipeline", "--simulate", "dt=0.01", "steps=200", stdin=spec,
                       monkeypatch=monkeypatch)
    assert code == 0 and json.loads(out)["passed"]
    code, csv, _ = run(capsys, "simulate", "--simulate", "dt=0.05", "steps=4", "--format", "text",
                       stdin=spec, monkeypatch=monkeypatch)
    assert code == 0 and len(csv.splitlines()) == 6
    assert run(capsys, "gen", "maxwell", "--n", "1")[0] == 2


def test_simulate_flag_spec_word(files, capsys):
    code, out, _ = run(capsys, "simulate", "--simulate", "dt=0.1", "steps=10", files["rotor"])
    assert code == 0 and json.loads(out)["trajectory"]["steps"] == 10
    assert run(capsys, "simulate", "--simulate", "dt=oops", files["rotor"])[0] == 2


def test_nonlinear_system_rejected_by_gnh(files, capsys, tmp_path):
    spec = tmp_path / "cubic.json"
    data = json.loads(open(files["rotor"]).read())
    data["H"] = [{"coef": "1", "exp": [3, 0, 0]}]
    spec.write_text(dumps(data))
    code, _, err = run(capsys, "gnh", str(spec))
    assert code == 2 and "degree" in err


def test_random_generation(capsys):
    code, a, _ = run(capsys, "gen", "random", "--dim", "6", "--kernel-dim", "2", "--seed", "9")
    _, b, _ = run(capsys, "gen", "random", "--dim", "6", "--kernel-dim", "2", "--seed", "9")
    assert code == 0 and a == b
    assert run(capsys, "gen", "random", "--dim", "5", "--kernel-dim", "2")[0] == 2


def test_corpus_text(capsys):
    code, out, _ = run(capsys, "pipeline", "--corpus", "6", "--format", "text", "--workers", "1")
    assert code == 0 and out.strip() == "corpus: 6 systems, PASS"
