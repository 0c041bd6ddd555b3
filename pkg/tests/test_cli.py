"""Experiment runner: config validation, artifacts, determinism, exit codes."""

import json
import os

import numpy as np
import pytest

from knudsenlab import cli


def write_cfg(tmp_path, body, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


SMALL_DECAY = """
[model]
kind = hydro_bgk
order = 6
mx = 3

[epsilon]
grid = 0.5, 0.2

[experiment]
t_end = 0.6
amplitude = 0.05
data = ill_prepared

[runtime]
seed = 3
"""


class TestConfigValidation:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, "[experiment]\nwhatever = 3\n")
        rc = cli.main(["decay-sweep", "--config", cfg, "--output", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG

    def test_unknown_section_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, "[solver]\nx = 1\n")
        rc = cli.main(["verify", "--config", cfg, "--output", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG

    def test_empty_epsilon_grid_names_key(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[epsilon]\ngrid =\n")
        rc = cli.main(["decay-sweep", "--config", cfg, "--output", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG
        err = capsys.readouterr().err
        assert "grid" in err

    def test_missing_file(self, tmp_path):
        rc = cli.main(["verify", "--config", str(tmp_path / "nope.ini"),
                       "--output", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG

    def test_eps_out_of_range(self, tmp_path):
        cfg = write_cfg(tmp_path, "[epsilon]\ngrid = 2.0\n")
        rc = cli.main(["decay-sweep", "--config", cfg, "--output", str(tmp_path / "o")])
        assert rc == cli.EXIT_CONFIG


class TestVerifyExperiment:
    def test_hydro_bgk_passes(self, tmp_path):
        cfg = write_cfg(tmp_path, "[model]\nkind = hydro_bgk\norder = 6\n")
        out = tmp_path / "out"
        rc = cli.main(["verify", "--config", cfg, "--output", str(out)])
        assert rc == cli.EXIT_OK
        result = json.loads((out / "result.json").read_text())
        assert result["passed"] is True
        names = {c["name"] for c in result["checks"]}
        assert any(n.startswith("H1") for n in names)
        assert any(n.startswith("H3") for n in names)


class TestDecaySweep:
    def test_csv_schema_and_pass(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_DECAY)
        out = tmp_path / "out"
        rc = cli.main(["decay-sweep", "--config", cfg, "--output", str(out)])
        assert rc == cli.EXIT_OK
        lines = (out / "decay.csv").read_text().splitlines()
        assert lines[0].startswith("# knudsenlab=")
        assert lines[1] == "eps,t,norm_L2,norm_Hk,norm_HypEps,norm_HypPerp"
        assert len(lines) > 10
        result = json.loads((out / "result.json").read_text())
        assert result["passed"]
        assert "tau" in result["details"]

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_DECAY)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(["decay-sweep", "--config", cfg, "--output", str(out1)]) == 0
        assert cli.main(["decay-sweep", "--config", cfg, "--output", str(out2)]) == 0
        assert (out1 / "decay.csv").read_bytes() == (out2 / "decay.csv").read_bytes()

    def test_threaded_run_matches(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_DECAY)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(["decay-sweep", "--config", cfg, "--output", str(out1)]) == 0
        assert cli.main(["decay-sweep", "--config", cfg, "--output", str(out2),
                         "--threads", "2"]) == 0
        a = (out1 / "decay.csv").read_text().splitlines()[2:]
        b = (out2 / "decay.csv").read_text().splitlines()[2:]
        assert len(a) == len(b)
        for ra, rb in zip(a, b):
            va = np.array([float(x) for x in ra.split(",")])
            vb = np.array([float(x) for x in rb.split(",")])
            assert np.all(np.abs(va - vb) <= 1e-13 * np.maximum(np.abs(va), 1.0))


class TestSimulate:
    def test_simulate_writes_artifacts(self, tmp_path):
        body = SMALL_DECAY.replace("0.5, 0.2", "0.5")
        cfg = write_cfg(tmp_path, body)
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", cfg, "--output", str(out)])
        assert rc == cli.EXIT_OK
        assert (out / "decay.csv").exists()
        result = json.loads((out / "result.json").read_text())
        assert result["experiment"] == "simulate"
        assert result["checks"][0]["name"] == "conservation.kernel_moments"


class TestBranchesExperiment:
    def test_csv_and_checks(self, tmp_path):
        cfg = write_cfg(tmp_path, "[model]\nkind = hydro_bgk\norder = 8\n"
                                  "[experiment]\nzeta_points = 8\n")
        out = tmp_path / "out"
        rc = cli.main(["branches", "--config", cfg, "--output", str(out)])
        assert rc == cli.EXIT_OK
        lines = (out / "branches.csv").read_text().splitlines()
        assert lines[1] == "zeta,branch,re_lambda,im_lambda"
        branches = {row.split(",")[1] for row in lines[2:]}
        assert branches == {"-1", "0", "1", "2"}


class TestExitCodes:
    def test_assertion_failure_exit_one(self, tmp_path, monkeypatch):
        def failing(cfg, outdir):
            return {"checks": [cli._check("always.fails", 1.0, 0.0)],
                    "outputs": []}

        monkeypatch.setitem(cli.RUNNERS, "verify", failing)
        cfg = write_cfg(tmp_path, "[model]\nkind = hydro_bgk\norder = 6\n")
        out = tmp_path / "out"
        rc = cli.main(["verify", "--config", cfg, "--output", str(out)])
        assert rc == cli.EXIT_ASSERT
        result = json.loads((out / "result.json").read_text())
        assert result["failing"] == ["always.fails"]

    def test_numerical_failure_exit_three(self, tmp_path, monkeypatch):
        def exploding(cfg, outdir):
            raise RuntimeError("non-finite state at t=0.1")

        monkeypatch.setitem(cli.RUNNERS, "simulate", exploding)
        cfg = write_cfg(tmp_path, "[model]\nkind = hydro_bgk\norder = 6\n")
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", cfg, "--output", str(out)])
        assert rc == cli.EXIT_NUMERIC
        result = json.loads((out / "result.json").read_text())
        assert "non-finite" in result["error"]

    def test_env_thread_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KNUDSENLAB_THREADS", "2")
        cfg = write_cfg(tmp_path, SMALL_DECAY)
        out = tmp_path / "out"
        assert cli.main(["decay-sweep", "--config", cfg, "--output", str(out)]) == 0
