import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from padic_lipschitz import errors
from padic_lipschitz.cli import evaluate, load_spec, main, parse_spec, run_spec

SPECS = Path(__file__).resolve().parent.parent / "demos" / "specs"
IDENTITY = SPECS / "identity_q3.json"


def base_spec(**overrides):
    data = {
        "schema": 1, "p": 3, "precision": 40, "window": [0, 3], "seed": 42,
        "samples": 2000, "exhaust": 5,
        "family": [{"y": ["0"], "function": {
            "a": 1, "b": 1, "e": "1", "c_prime": "0",
            "source": {"center": "0", "xi": "1", "m": 1, "n": 1, "l_min": 0, "l_max": None}}}],
        "tasks": ["extend:isometric", "verify-lipschitz:1"],
    }
    data.update(overrides)
    return data


def write(tmp_path, data, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestParse:
    def test_round_trip_is_canonical(self):
        spec = load_spec(IDENTITY)
        canon = spec.to_dict()
        assert parse_spec(canon).to_dict() == canon
        assert canon["family"][0]["function"]["target"]["m"] == 1

    @pytest.mark.parametrize("change", [
        {"p": 4}, {"schema": 2}, {"window": [3, 0]}, {"family": []}, {"precision": 3},
        {"tasks": ["extend:mcshane"]}, {"tasks": ["verify-lipschitz:abc"]},
    ])
    def test_rejected(self, change):
        with pytest.raises(errors.SpecParseError):
            parse_spec(base_spec(**change))

    def test_bad_function_is_a_parse_error(self):
        data = base_spec()
        data["family"][0]["function"]["b"] = 2
        with pytest.raises(errors.SpecParseError):
            parse_spec(data)

    def test_verify_defaults_to_last_extension(self):
        spec = parse_spec(base_spec(tasks=["extend:center", "extend:phi", "verify-lipschitz:1"]))
        assert spec.tasks[-1]["method"] == "phi"
        spec = parse_spec(base_spec(tasks=["verify-lipschitz:1"]))
        assert spec.tasks[-1]["method"] == "input"


class TestRun:
    def test_q1_passes(self, tmp_path, capsys):
        path = write(tmp_path, base_spec())
        assert main(["run", path, "--seed", "42", "--samples", "10000"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["overall"] == "pass" and report["samples"] == 10000
        ext_task = report["tasks"][0]
        assert ext_task["results"][0]["claimed_lipschitz"] == "1"
        assert ext_task["results"][0]["restriction_exact"] is True

    def test_overclaim_fails_with_witness(self, capsys):
        assert main(["run", str(SPECS / "center_overclaim_q3.json")]) == 1
        report = json.loads(capsys.readouterr().out)
        res = report["tasks"][-1]["results"][0]
        assert res["passed"] is False and len(res["witness"]) == 2

    def test_parse_failure_writes_nothing(self, tmp_path, capsys):
        path = write(tmp_path, base_spec(p=4))
        out = tmp_path / "out"
        assert main(["run", path, "--out", str(out)]) == 2
        assert not out.exists()
        assert "spec error" in capsys.readouterr().err

    def test_unreadable_spec(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", str(bad)]) == 2
        assert main(["run", str(tmp_path / "missing.json")]) == 2

    def test_out_directory(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", str(IDENTITY), "--out", str(out)]) == 0
        names = sorted(f.name for f in out.iterdir())
        assert names == ["extension-center.json", "extension-isometric.json",
                         "extension-phi.json", "report.json"]
        doc = json.loads((out / "extension-phi.json").read_text())
        assert doc["method"] == "phi" and doc["extensions"][0]["fold_order"] == [0]

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["run", str(IDENTITY), "--out", str(a)])
        main(["run", str(IDENTITY), "--out", str(b)])
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes()

    def test_text_format(self, tmp_path):
        out = tmp_path / "t"
        assert main(["run", str(IDENTITY), "--format", "text", "--out", str(out)]) == 0
        text = (out / "report.txt").read_text()
        assert text.startswith("p=3") and text.rstrip().endswith("overall: pass")
        assert "PASS extend:isometric" in text

    def test_flags_override(self, tmp_path, capsys):
        path = write(tmp_path, base_spec())
        main(["run", path, "--seed", "5", "--precision", "30", "--window=-1:2"])
        report = json.loads(capsys.readouterr().out)
        assert (report["seed"], report["precision"], report["window"]) == (5, 30, [-1, 2])

    def test_task_error_is_reported(self, tmp_path, capsys):
        data = base_spec(tasks=["extend:center"])
        data["family"][0]["function"]["e"] = "1/3"     # 3-Lipschitz, not 1
        assert main(["run", write(tmp_path, data)]) == 1
        task = json.loads(capsys.readouterr().out)["tasks"][0]
        assert task["status"] == "fail" and task["error"].startswith("NotUnitLipschitz")

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "padic_lipschitz", "run", str(IDENTITY),
                               "--format", "text"], capture_output=True, text=True)
        assert proc.returncode == 0 and "overall: pass" in proc.stdout


class TestEval:
    def test_identity(self, tmp_path, capsys):
        data = base_spec(window=[-1, 3])
        data["family"][0]["function"]["source"].update(xi="2", l_min=-1)
        assert main(["eval", write(tmp_path, data), "2/3"]) == 0
        assert capsys.readouterr().out.strip() == "2/3"

    def test_center_off_domain_prints_c_prime(self, tmp_path, capsys):
        data = base_spec(tasks=["extend:center"])
        data["family"][0]["function"]["c_prime"] = "5"
        assert main(["eval", write(tmp_path, data), "2"]) == 0
        assert capsys.readouterr().out.strip() == "5"

    def test_below_window(self, tmp_path, capsys):
        assert main(["eval", write(tmp_path, base_spec()), "2/3"]) == 1
        assert "OutsideRepresentablePrecision" in capsys.readouterr().err
        with pytest.raises(errors.OutsideRepresentablePrecision):
            evaluate(parse_spec(base_spec()), Fraction(1, 9))

    def test_saved_extension(self, tmp_path, capsys):
        out = tmp_path / "out"
        main(["run", str(IDENTITY), "--out", str(out)])
        capsys.readouterr()
        assert main(["eval", str(IDENTITY), "7", "--extension",
                     str(out / "extension-center.json")]) == 0
        assert capsys.readouterr().out.strip() == "7"
        assert main(["eval", str(IDENTITY), "2", "--method", "center"]) == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_approximate_value(self, tmp_path, capsys):
        data = base_spec(p=5, tasks=["extend:isometric"])
        data["family"][0]["function"].update(a=1, b=2, e=str(6 * 5**4), branch="1")
        data["family"][0]["function"]["source"].update(n=2, l_max=4)
        assert main(["eval", write(tmp_path, data), "1"]) == 0
        assert "O(5^" in capsys.readouterr().out

    def test_bad_index(self, tmp_path):
        assert main(["eval", write(tmp_path, base_spec()), "1", "--y-index", "3"]) == 2

    def test_needs_extension_source(self, tmp_path):
        assert main(["eval", write(tmp_path, base_spec(tasks=["check-jacobian"])), "1"]) == 2

    def test_run_spec_state(self):
        report, state = run_spec(load_spec(IDENTITY))
        assert set(state) == {"center", "phi", "isometric"}
        assert [t["status"] for t in report["tasks"]] == ["pass"] * len(report["tasks"])
