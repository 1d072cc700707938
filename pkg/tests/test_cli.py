import csv
import json
import subprocess
import sys

import pytest

from dmsolve import cli
from dmsolve import io as dio


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def _run(*argv):
    return cli.main([str(a) for a in argv])


class TestMinimize:
    def test_kerr_model_run(self, tmp_path):
        cfg = _write(tmp_path, {"potential": "kerr", "measure": "model", "lambda": 1.0})
        out = tmp_path / "a"
        assert _run("minimize", "--config", cfg, "--out", out, "--threads", 1) == 0
        res = json.loads((out / "result.json").read_text())
        assert res["converged"] and res["energy"] < -0.148
        f = dio.read_field(out / "out.dmsf")
        assert f.power == pytest.approx(1.0, abs=1e-10)

    def test_deterministic_across_threads(self, tmp_path):
        cfg = _write(tmp_path, {"potential": "kerr", "lambda": 0.8})
        outs = []
        for t in (1, 3):
            out = tmp_path / f"t{t}"
            assert _run("minimize", "--config", cfg, "--out", out, "--threads", t) == 0
            outs.append(((out / "result.json").read_bytes(), (out / "out.dmsf").read_bytes()))
        assert outs[0] == outs[1]

    def test_unbounded_exit(self, tmp_path):
        cfg = _write(tmp_path, {"potential": {"terms": [{"c": 1.0, "s": 12.0}], "gamma0": 12.0},
                                "lambda": 1.0})
        assert _run("minimize", "--config", cfg, "--out", tmp_path) == 3
        assert json.loads((tmp_path / "result.json").read_text())["status"] == "unbounded"

    def test_not_converged_exit(self, tmp_path):
        cfg = _write(tmp_path, {"lambda": 1.0, "optimizer": {"max_iters": 3}})
        assert _run("minimize", "--config", cfg, "--out", tmp_path) == 2


class TestConfigErrors:
    @pytest.mark.parametrize("text", [
        "{not json",
        json.dumps({"lambda": -1.0}),
        json.dumps({"lambda": 1.0, "bogus": 1}),
        json.dumps({"lambda": 1.0, "grid": {"n": 1000}}),
        json.dumps({"lambda": 1.0, "optimizer": {"nope": 1}}),
        json.dumps({"lambda": 1.0, "potential": {"terms": [{"c": 1.0, "s": 1.5}]}}),
        json.dumps({"lambda": 1.0, "seed": -3}),
        json.dumps({"dav": 1.0}),
        json.dumps([1, 2]),
    ])
    def test_exit_one(self, tmp_path, text):
        assert _run("minimize", "--config", _write(tmp_path, text), "--out", tmp_path) == 1

    def test_missing_file_and_bad_usage(self, tmp_path):
        assert _run("minimize", "--config", tmp_path / "none.json") == 1
        assert _run("frobnicate") == 1
        assert _run("minimize") == 1
        cfg = _write(tmp_path, {"lambda": 1.0})
        assert _run("minimize", "--config", cfg, "--threads", 0) == 1


class TestOtherCommands:
    def test_probe(self, tmp_path):
        cfg = _write(tmp_path, {"dav": 0.0, "probe": {"gamma": 8.0,
                                                       "schedule": {"start": 1e-2, "stop": 1e-4, "num": 21}}})
        assert _run("probe", "--config", cfg, "--out", tmp_path) == 0
        rep = json.loads((tmp_path / "probe.json").read_text())
        assert rep["unbounded"]
        rows = list(csv.reader((tmp_path / "probe.csv").open()))
        assert rows[0] == ["sigma0", "energy"] and len(rows) == 22

    def test_density(self, tmp_path):
        cfg = _write(tmp_path, {"density": {"profile": {"segments": [{"d0": 2.0, "len": 1.0},
                                                                    {"d0": -2.0, "len": 1.0}]},
                                            "r": [0.5, 1.0, 1.5, 3.0]}})
        assert _run("density", "--config", cfg, "--out", tmp_path) == 0
        rows = list(csv.reader((tmp_path / "density.csv").open()))
        assert rows[1:] == [["0.5", "0.5"], ["1.0", "0.5"], ["1.5", "0.5"]]

    def test_gaussian(self, tmp_path):
        cfg = _write(tmp_path, {"lambda": 1.0, "gaussian": {"sigma0": [2.0], "r": [0.0]}})
        assert _run("gaussian", "--config", cfg, "--out", tmp_path) == 0
        rows = list(csv.DictReader((tmp_path / "gaussian.csv").open()))
        assert float(rows[0]["h1_seminorm_sq"]) == pytest.approx(0.5)
        assert float(rows[0]["l4_norm4"]) == pytest.approx((2 * 3.141592653589793) ** -0.5)

    def test_threshold_no_threshold(self, tmp_path):
        cfg = _write(tmp_path, {"potential": {"terms": [{"c": 1.0, "s": 6.0}]},
                                "threshold": {"bracket": [0.05, 0.2]}})
        assert _run("threshold", "--config", cfg, "--out", tmp_path) == 4
        assert json.loads((tmp_path / "threshold.json").read_text())["outcome"] == "no_threshold"

    def test_threshold_missing_block(self, tmp_path):
        assert _run("threshold", "--config", _write(tmp_path, {}), "--out", tmp_path) == 1


def test_console_entry_point(tmp_path):
    cfg = _write(tmp_path, {"density": {"profile": "model", "r": [0.25]}})
    proc = subprocess.run([sys.executable, "-m", "dmsolve.cli", "density", "--config", cfg,
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "density.csv").read_text() == "r,psi\n0.25,1.0\n"
