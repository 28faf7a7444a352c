"""CLI flows chaining subcommands through their output files."""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import multigraph_moments
from multigraph_moments.cli import run
from multigraph_moments.domain import ExitCode


@pytest.fixture
def workdir(tmp_path, clean_env, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestIngestThenAnalyse:
    def test_ingest_solve_estimate_partition(self, workdir, edge_file):
        assert run(["ingest", "--edges", str(edge_file), "--out", "ingest"]) == ExitCode.OK
        edges = workdir / "ingest" / "edges.txt"
        degrees = workdir / "ingest" / "degrees.csv"
        assert pd.read_csv(degrees)["degree"].tolist() == [2] * 6

        assert run(["solve-beta", "--degrees", str(degrees), "--out", "beta"]) == ExitCode.OK
        beta = pd.read_csv(workdir / "beta" / "beta.csv", dtype={"node_id": str})
        assert beta["node_id"].tolist() == ["a", "b", "c", "d", "e", "f"]
        assert np.allclose(beta["beta_i"], 12 / 7)

        assert run(["estimate", "--degrees", str(degrees), "--out", "est"]) == ExitCode.OK
        omega = pd.read_csv(workdir / "est" / "omega.csv", index_col=0).to_numpy()
        assert np.allclose(omega.sum(axis=1), 2)

        assert run(["msp", "--edges", str(edges), "--out", "msp", "--restarts", "20"]) == 0
        labels = pd.read_csv(workdir / "msp" / "partition.csv")["label"].tolist()
        assert labels == [0, 0, 0, 1, 1, 1]

    def test_sample_and_compare(self, workdir, edge_file):
        code = run(["sample", "--edges", str(edge_file), "--samples", "200", "--chains", "2"])
        assert code == ExitCode.OK
        meta = json.loads((workdir / "out" / "sample.json").read_text())
        assert meta["chains"] == 2
        assert meta["steps"] > 0
        assert (workdir / "out" / "omega_se.csv").exists()

        code = run(["compare", "--edges", str(edge_file), "--samples", "200", "--out", "cmp"])
        assert code == ExitCode.OK
        report = json.loads((workdir / "cmp" / "comparison.json").read_text())
        assert report["name"] == "estimator_comparison"
        assert (workdir / "cmp" / "comparison_seed20200229.csv").exists()

    def test_json_logs(self, workdir, edge_file):
        args = ["ingest", "--edges", str(edge_file), "--log-format", "json"]
        assert run(args) == ExitCode.OK
        lines = (workdir / "out" / "run.log").read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert records[0]["event"] == "stage_start"
        assert records[-1]["event"] == "stage_end"
        assert records[-1]["exit_code"] == 0


class TestConfigLayers:
    def test_project_file_sets_defaults(self, workdir, edge_file):
        (workdir / ".multigraph-moments.toml").write_text('null = "cl"\nrestarts = 5\n')
        assert run(["msp", "--edges", str(edge_file)]) == ExitCode.OK
        meta = json.loads((workdir / "out" / "msp.json").read_text())
        assert meta["null_source"] == "cl"
        assert meta["restarts"] == 5

    def test_explicit_seed_beats_env(self, workdir, edge_file, monkeypatch):
        monkeypatch.setenv("MGM_SEED", "77")
        assert run(["ingest", "--edges", str(edge_file)]) == ExitCode.OK
        assert run(["ingest", "--edges", str(edge_file), "--seed", "3", "--out", "o"]) == 0
        assert "seed=77" in (workdir / "out" / "run.log").read_text()
        assert "seed=3" in (workdir / "o" / "run.log").read_text()


class TestModuleEntryPoint:
    def test_python_dash_m(self, workdir):
        result = subprocess.run(
            [sys.executable, "-m", "multigraph_moments", "--version"],
            env={**os.environ, "PYTHONPATH": str(Path(multigraph_moments.__file__).parents[1])},
            capture_output=True,
            text=True,
            check=False,
        )
        assert result.returncode == 0
        assert "multigraph-moments" in result.stdout
