import json
import subprocess
import sys

import numpy as np
import pytest

from mfchaos import cli
from mfchaos.errors import MissingField, RangeError, UnknownKey
from mfchaos.io import write_cloud_csv

MODEL = {"kind": "average_form", "dim": 1, "name": "attraction",
         "drift": {"kernel": "linear_attraction", "kappa": 1.0},
         "diffusion": {"kernel": "constant_sigma", "s": 0.5},
         "lipschitz": {"alpha": 0.5, "beta": 0.0, "M": 2.0, "M_prime": 0.0},
         "initial": {"distribution": "normal", "std": 1.0}}


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "model.json"
    p.write_text(json.dumps(MODEL))
    return p


def test_precedence_defaults_file_flags(tmp_path, model_file):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'model = "{model_file}"\nn = 7\ndt = 0.05\nout = "x"\n')
    c = cli.parse_config("simulate", cfg, {"n": "9"})
    assert c.params["n"] == 9 and c.params["dt"] == 0.05 and c.params["t"] == 1.0
    assert cli.ExperimentConfig.from_dict(c.to_dict()).to_dict() == c.to_dict()


def test_validation_errors(model_file):
    with pytest.raises(RangeError) as info:
        cli.parse_config("simulate", flags={"model": str(model_file), "out": "o",
                                            "dt": 2.0, "t": 1.0})
    assert info.value.field == "dt"
    with pytest.raises(MissingField):
        cli.parse_config("simulate", flags={"out": "o"})
    with pytest.raises(UnknownKey):
        cli.parse_config("simulate", file_values={"model": "m", "out": "o", "colour": 1})
    with pytest.raises(RangeError):
        cli.parse_config("simulate", flags={"model": "m", "out": "o", "n": "1"})
    with pytest.raises(RangeError):
        cli.parse_config("chaos", flags={"model": "m", "out": "o", "n_list": "8,16,32"})
    with pytest.raises(UnknownKey):
        cli.parse_config("fly", flags={})


def test_exit_codes(tmp_path, model_file, capsys):
    assert cli.main(["simulate", "--model", str(model_file), "--out", str(tmp_path / "s"),
                     "--n", "4", "--dt", "0.1"]) == 0
    assert cli.main(["simulate", "--model", str(model_file), "--out", str(tmp_path / "s"),
                     "--dt", "2"]) == 1
    assert "[cli]" in capsys.readouterr().err
    assert cli.main(["simulate", "--bogus"]) == 1
    assert cli.main(["meanfield", "--model", str(model_file), "--out", str(tmp_path / "m"),
                     "--dt", "0.01", "--mesh", "0.015"]) == 1
    assert "[mf_solver]" in capsys.readouterr().err
    assert cli.main([]) == 1


def test_version_flag():
    out = subprocess.run([sys.executable, "-m", "mfchaos", "--version"], capture_output=True,
                         text=True)
    assert out.returncode == 0
    assert f"schema {cli.SCHEMA_VERSION}" in out.stdout


def test_simulate_outputs_and_manifest(tmp_path, model_file):
    out = tmp_path / "sim"
    code, man = cli.run(cli.parse_config("simulate", flags={
        "model": str(model_file), "out": str(out), "n": 5, "dt": 0.1,
        "checkpoints": "0,0.5,1"}))
    assert code == 0 and man.verdict == "none"
    assert sorted(man.outputs) == ["checkpoint_000.csv", "checkpoint_001.csv",
                                   "checkpoint_002.csv", "checkpoints.csv"]
    saved = json.loads((out / "manifest.json").read_text())
    assert saved["outputs"] == man.outputs and "wall_time" not in saved
    assert json.loads((out / "timing.json").read_text())["wall_time_seconds"] >= 0


def test_ot_command(tmp_path):
    rng = np.random.default_rng(0)
    write_cloud_csv(tmp_path / "a.csv", rng.normal(size=(5, 2)))
    write_cloud_csv(tmp_path / "b.csv", rng.normal(size=(5, 2)))
    results = {}
    for method in ("auto", "assignment", "bruteforce"):
        out = tmp_path / method
        assert cli.main(["ot", "--mu", str(tmp_path / "a.csv"), "--nu", str(tmp_path / "b.csv"),
                         "--method", method, "--out", str(out)]) == 0
        results[method] = json.loads((out / "ot.json").read_text())["cost"]
    assert results["auto"] == pytest.approx(results["bruteforce"], abs=1e-12)
    assert results["assignment"] == pytest.approx(results["bruteforce"], abs=1e-12)


def test_meanfield_command(tmp_path, model_file):
    out = tmp_path / "mf"
    assert cli.main(["meanfield", "--model", str(model_file), "--out", str(out), "--m", "200",
                     "--dt", "0.0078125", "--meshes", "0.25,0.125,0.0625"]) == 0
    log = json.loads((out / "convergence.json").read_text())
    assert log["picard_iterations"] and len(log["mesh_table"]) == 3
    assert (out / "times.csv").exists()


def test_omega_command(tmp_path):
    spec = {"A": {"b": [1.0, 0.0]}, "B": {"b": [0.0, 0.0], "a": [[1.0, 0.0], [0.0, 1.0]]},
            "x": [0.0, 0.0], "y": [1.0, 0.0]}
    (tmp_path / "t.json").write_text(json.dumps(spec))
    code = cli.main(["omega", "--triplets", str(tmp_path / "t.json"), "--out",
                     str(tmp_path / "om"), "--replicates", "8"])
    res = json.loads((tmp_path / "om" / "omega.json").read_text())
    assert code == (0 if res["passed"] else 2)
    # drift term -1 plus W_S(0, I)^2 = 1 in two dimensions
    assert res["closed_form"] == pytest.approx(0.0, abs=1e-12)


def test_triplet_from_json():
    t = cli.triplet_from_json({"b": 1.0, "sigma": 2.0, "eta": 0.5,
                               "base": {"atoms": [{"z": [1.0], "lambda": 2.0}]}})
    assert t.dim == 1 and t.has_jumps and t.a[0, 0] == 4.0


def test_chaos_failing_band_exits_two(tmp_path, model_file):
    args = ["chaos", "--model", str(model_file), "--n-list", "4,8,32", "--trials", "10",
            "--m", "200", "--dt", "0.03125", "--aleph-trials", "50", "--checkpoints", "2"]
    assert cli.main(args + ["--out", str(tmp_path / "a"), "--slope-band", "5,6"]) == 2
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["passed"] is False
    header = (tmp_path / "a" / "report.csv").read_text().splitlines()[0]
    assert header == "N,t,distance,stderr,aleph,aleph_stderr,bound,verdict"


def test_rerun_manifest_is_identical(tmp_path, model_file):
    args = ["simulate", "--model", str(model_file), "--out", str(tmp_path / "r"), "--n", "6",
            "--dt", "0.1", "--seed", "42"]
    cli.main(args)
    first = (tmp_path / "r" / "manifest.json").read_bytes()
    cli.main(args)
    assert (tmp_path / "r" / "manifest.json").read_bytes() == first
