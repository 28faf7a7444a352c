"""Tests for MomentsConfig hierarchical loading."""

from pathlib import Path

import pytest

from multigraph_moments.config import MomentsConfig, _coerce, _normalize_toml


class TestCoerce:
    def test_int_field(self):
        assert _coerce("seed", "7") == 7
        assert _coerce("max_sweeps", "500") == 500

    def test_float_field(self):
        assert _coerce("tol", "1e-9") == pytest.approx(1e-9)
        assert _coerce("fraction", "0.5") == 0.5

    def test_path_field(self):
        result = _coerce("out", "results")
        assert isinstance(result, Path)
        assert str(result) == "results"

    def test_string_field_passthrough(self):
        assert _coerce("model", "configuration") == "configuration"

    def test_none_passthrough(self):
        assert _coerce("dt", None) is None


class TestNormalizeToml:
    def test_kebab_to_snake(self):
        result = _normalize_toml({"max-sweeps": 30, "burn-in": 100})
        assert result["max_sweeps"] == 30
        assert result["burn_in"] == 100

    def test_unknown_keys_pass_through(self):
        result = _normalize_toml({"plot-style": "dark"})
        # unknown keys normalize but won't match MomentsConfig fields
        assert result["plot_style"] == "dark"


class TestFromPyproject:
    def test_reads_tool_section(self, tmp_path):
        (tmp_path / "pyproject.toml").write_text(
            '[project]\nname = "test"\n\n'
            "[tool.multigraph-moments]\n"
            "seed = 11\n"
            'model = "configuration"\n'
        )
        result = MomentsConfig.from_pyproject(tmp_path)
        assert result["seed"] == 11
        assert result["model"] == "configuration"

    def test_missing_section_returns_empty(self, tmp_path):
        (tmp_path / "pyproject.toml").write_text('[project]\nname = "test"\n')
        assert MomentsConfig.from_pyproject(tmp_path) == {}

    def test_missing_file_returns_empty(self, tmp_path):
        assert MomentsConfig.from_pyproject(tmp_path) == {}

    def test_malformed_toml_returns_empty(self, tmp_path):
        (tmp_path / "pyproject.toml").write_text("[tool.multigraph-moments\nseed = \n")
        assert MomentsConfig.from_pyproject(tmp_path) == {}


class TestFromFile:
    def test_reads_standalone_toml(self, tmp_path):
        (tmp_path / ".multigraph-moments.toml").write_text('out = "runs"\nk = 4\n')
        result = MomentsConfig.from_file(tmp_path)
        assert result["out"] == Path("runs")
        assert result["k"] == 4

    def test_missing_file_returns_empty(self, tmp_path):
        assert MomentsConfig.from_file(tmp_path) == {}


class TestFromEnv:
    def test_reads_env_vars(self, clean_env, monkeypatch):
        monkeypatch.setenv("MGM_SEED", "99")
        monkeypatch.setenv("MGM_TOL", "1e-8")
        monkeypatch.setenv("MGM_OUT", "elsewhere")
        result = MomentsConfig.from_env()
        assert result == {"seed": 99, "tol": 1e-8, "out": Path("elsewhere")}

    def test_missing_env_returns_empty(self, clean_env):
        assert MomentsConfig.from_env() == {}


class TestResolve:
    def test_defaults(self, tmp_path, clean_env):
        cfg = MomentsConfig.resolve(project_root=tmp_path)
        assert cfg.seed == 20200229
        assert cfg.tol == 1e-12
        assert cfg.max_sweeps == 10_000
        assert cfg.dt is None
        assert cfg.burn_in is None
        assert cfg.model == "uniform"
        assert cfg.null == "uniform-I"
        assert cfg.root_method == "newton-bisect"

    def test_explicit_overrides_all(self, tmp_path, clean_env, monkeypatch):
        (tmp_path / "pyproject.toml").write_text("[tool.multigraph-moments]\nseed = 10\n")
        monkeypatch.setenv("MGM_SEED", "20")
        cfg = MomentsConfig.resolve({"seed": 3}, project_root=tmp_path)
        assert cfg.seed == 3

    def test_explicit_none_does_not_override(self, tmp_path, clean_env, monkeypatch):
        monkeypatch.setenv("MGM_SEED", "20")
        cfg = MomentsConfig.resolve({"seed": None}, project_root=tmp_path)
        assert cfg.seed == 20

    def test_pyproject_overrides_file(self, tmp_path, clean_env):
        (tmp_path / "pyproject.toml").write_text("[tool.multigraph-moments]\nk = 7\n")
        (tmp_path / ".multigraph-moments.toml").write_text("k = 3\n")
        cfg = MomentsConfig.resolve(project_root=tmp_path)
        assert cfg.k == 7

    def test_file_overrides_env(self, tmp_path, clean_env, monkeypatch):
        monkeypatch.setenv("MGM_K", "9")
        (tmp_path / ".multigraph-moments.toml").write_text("k = 3\n")
        cfg = MomentsConfig.resolve(project_root=tmp_path)
        assert cfg.k == 3

    def test_unknown_toml_keys_ignored(self, tmp_path, clean_env):
        (tmp_path / ".multigraph-moments.toml").write_text('samples = 5\nplot-style = "x"\n')
        cfg = MomentsConfig.resolve(project_root=tmp_path)
        assert cfg.samples == 5
        assert not hasattr(cfg, "plot_style")


class TestValidation:
    def test_rejects_nonpositive_tol(self):
        with pytest.raises(ValueError, match="tol"):
            MomentsConfig(tol=0)

    def test_rejects_unknown_model(self):
        with pytest.raises(ValueError):
            MomentsConfig(model="erdos-renyi")

    def test_rejects_unknown_root_method(self):
        with pytest.raises(ValueError, match="root_method"):
            MomentsConfig(root_method="secant")

    def test_rejects_fraction_outside_unit_interval(self):
        with pytest.raises(ValueError, match="fraction"):
            MomentsConfig(fraction=1.5)
