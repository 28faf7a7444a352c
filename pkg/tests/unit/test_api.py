"""Tests for the NullModel high-level API."""

import numpy as np
import pytest

from multigraph_moments.api import NullModel
from multigraph_moments.domain import EstimateSource, NullSource
from multigraph_moments.mcmc import ChainConfig


class TestNullModelInit:
    def test_resolves_config_from_args(self, tmp_path, clean_env):
        model = NullModel([2, 2, 2], seed=5, tol=1e-10, project_root=tmp_path)
        assert model.config.seed == 5
        assert model.config.tol == 1e-10
        assert model.degrees.d.tolist() == [2, 2, 2]

    def test_resolves_from_pyproject(self, tmp_path, clean_env):
        (tmp_path / "pyproject.toml").write_text(
            '[project]\nname = "test"\n\n[tool.multigraph-moments]\nsamples = 250\nk = 3\n'
        )
        model = NullModel([2, 2, 2], project_root=tmp_path)
        assert model.config.samples == 250
        assert model.config.k == 3

    def test_explicit_beats_env(self, tmp_path, clean_env, monkeypatch):
        monkeypatch.setenv("MGM_SEED", "11")
        assert NullModel([2, 2, 2], project_root=tmp_path).config.seed == 11
        assert NullModel([2, 2, 2], seed=3, project_root=tmp_path).config.seed == 3

    def test_graph_must_match_degrees(self, tmp_path, clean_env, triangle):
        with pytest.raises(ValueError, match="do not match"):
            NullModel([2, 2, 2, 2], graph=triangle, project_root=tmp_path)


class TestNullModelEstimates:
    def test_solve_is_cached(self, tmp_path, clean_env):
        model = NullModel([2, 2, 2], project_root=tmp_path)
        assert model.solve() is model.solve()
        assert np.allclose(model.solve().beta, 1.5)

    def test_expected_by_null(self, tmp_path, clean_env):
        model = NullModel([2, 2, 2, 2], project_root=tmp_path)
        assert model.expected("cl").source is EstimateSource.CL
        uniform = model.expected(NullSource.UNIFORM_I)
        assert uniform.source is EstimateSource.UNIFORM_SOLVER
        assert uniform.omega[0, 1] == pytest.approx(2 / 3)

    def test_custom_has_no_builtin(self, tmp_path, clean_env):
        with pytest.raises(ValueError, match="no built-in"):
            NullModel([2, 2, 2], project_root=tmp_path).expected("custom")

    def test_sample_from_realisation(self, tmp_path, clean_env):
        model = NullModel([2, 2, 2, 2], seed=1, project_root=tmp_path)
        est = model.sample(ChainConfig(samples=100, seed=1))
        assert est.source is EstimateSource.MCMC
        assert np.allclose(est.omega.sum(axis=1), 2)

    def test_mcmc_null_uses_config(self, tmp_path, clean_env, four_cycle):
        model = NullModel.from_graph(four_cycle, samples=50, project_root=tmp_path)
        assert model.expected("mcmc").source is EstimateSource.MCMC


class TestNullModelPartition:
    def test_two_triangles(self, tmp_path, clean_env, two_triangles):
        model = NullModel.from_graph(two_triangles, project_root=tmp_path)
        part = model.partition(null="cl", k=2, restarts=10)
        assert part.labels.tolist() == [0, 0, 0, 1, 1, 1]
        assert part.null_source is NullSource.CL

    def test_modularity_matrix_null_source(self, tmp_path, clean_env, two_triangles):
        model = NullModel.from_graph(two_triangles, project_root=tmp_path)
        assert model.modularity_matrix().null_source is NullSource.UNIFORM_I

    def test_graph_required(self, tmp_path, clean_env):
        with pytest.raises(ValueError, match="a graph is required"):
            NullModel([2, 2, 2], project_root=tmp_path).modularity_matrix()

    def test_graph_argument_must_match(self, tmp_path, clean_env, triangle, four_cycle):
        model = NullModel.from_graph(triangle, project_root=tmp_path)
        with pytest.raises(ValueError, match="do not match"):
            model.partition(four_cycle)
