"""Tests for domain types: enums, errors, MomentEstimates, BetaEstimate, ExperimentReport."""

import json
from pathlib import Path

import numpy as np
import pytest

from multigraph_moments.domain import (
    BetaEstimate,
    BracketError,
    ChainTarget,
    Classification,
    DataError,
    DegreeSequenceError,
    DivergentKernelError,
    EdgeListParseError,
    EstimateSource,
    ExitCode,
    ExperimentReport,
    MomentEstimates,
    MultigraphMomentsError,
    NullSource,
    NumericalError,
    StopReason,
    to_jsonable,
)


def _ones_offdiag(n: int, value: float = 1.0) -> np.ndarray:
    a = np.full((n, n), value)
    np.fill_diagonal(a, 0.0)
    return a


class TestEnums:
    def test_values(self):
        assert ChainTarget("configuration") is ChainTarget.CONFIGURATION
        assert NullSource("uniform-I") is NullSource.UNIFORM_I
        assert Classification.WELL_BEHAVED.value == "well_behaved"
        assert StopReason.NO_ROOT.value == "no_root"
        assert EstimateSource.UNIFORM_SOLVER.value == "uniform_solver"

    def test_exit_codes(self):
        assert [int(c) for c in ExitCode] == [0, 1, 2, 3]


class TestErrors:
    def test_hierarchy(self):
        assert issubclass(DegreeSequenceError, DataError)
        assert issubclass(DataError, MultigraphMomentsError)
        assert issubclass(BracketError, NumericalError)
        assert issubclass(DivergentKernelError, NumericalError)

    def test_parse_error_carries_line(self):
        err = EdgeListParseError("bad field", 7)
        assert err.line_number == 7
        assert str(err) == "line 7: bad field"

    def test_divergent_kernel_names_pair(self):
        err = DivergentKernelError((0, 3), 1.25)
        assert err.pair == (0, 3)
        assert "(0, 3)" in str(err)

    def test_bracket_error_copies_beta(self):
        beta = np.ones(3)
        err = BracketError(1, beta, 5.0, "no root")
        beta[0] = 9
        assert err.beta[0] == 1
        assert err.index == 1
        assert "coordinate 1" in str(err)


class TestMomentEstimates:
    def test_accepts_valid(self):
        est = MomentEstimates(omega=_ones_offdiag(3), source=EstimateSource.CL)
        assert est.n == 3
        assert est.variance is None

    def test_variance_from_sigma(self):
        sigma = _ones_offdiag(3, 2.0)
        est = MomentEstimates(omega=_ones_offdiag(3), source=EstimateSource.MCMC, sigma=sigma)
        assert np.array_equal(est.variance, _ones_offdiag(3, 4.0))

    def test_rejects_asymmetric(self):
        omega = _ones_offdiag(3)
        omega[0, 1] = 2
        with pytest.raises(ValueError, match="symmetric"):
            MomentEstimates(omega=omega, source=EstimateSource.CL)

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError, match="diagonal"):
            MomentEstimates(omega=np.ones((3, 3)), source=EstimateSource.CL)

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="nonnegative"):
            MomentEstimates(omega=_ones_offdiag(3, -1.0), source=EstimateSource.CL)

    def test_chi_of_one_allowed_for_sampled_sources(self):
        est = MomentEstimates(
            omega=_ones_offdiag(3), source=EstimateSource.MCMC, chi=_ones_offdiag(3)
        )
        assert est.chi is not None

    def test_chi_of_one_rejected_for_solver(self):
        with pytest.raises(ValueError, match="chi"):
            MomentEstimates(
                omega=_ones_offdiag(3),
                source=EstimateSource.UNIFORM_SOLVER,
                chi=_ones_offdiag(3),
            )


class TestBetaEstimate:
    def _estimate(self, beta):
        beta = np.asarray(beta, dtype=float)
        return BetaEstimate(
            beta=beta,
            degrees=np.full(beta.size, 2.0),
            iterations=3,
            final_mse=1e-20,
            converged=True,
            classification=Classification.WELL_BEHAVED,
            delta=1e-9,
            stop_reason=StopReason.TOLERANCE,
            mse_trace=(1e-3, 1e-10, 1e-20),
            residual=np.array([3e-10, 0.0, -4e-10]),
        )

    def test_psi_is_half_sum(self):
        assert self._estimate([1.5, 1.5, 1.5]).psi == pytest.approx(2.25)

    def test_residual_norm_unsquared(self):
        # ||(3e-10, 0, -4e-10)|| = 5e-10, divided by n = 3
        assert self._estimate([1.5, 1.5, 1.5]).residual_norm == pytest.approx(5e-10 / 3)

    def test_omega_nonnegative(self):
        assert self._estimate([1.5, 1.5, 1.5]).omega_nonnegative
        # f_01 = 10 * 10 / 20.2 > 1
        assert not self._estimate([10.0, 10.0, 0.2]).omega_nonnegative

    def test_to_dict_is_json_ready(self):
        d = self._estimate([1.5, 1.5, 1.5]).to_dict()
        assert d["stop_reason"] == "tolerance"
        assert d["classification"] == "well_behaved"
        assert d["mse_trace"] == [1e-3, 1e-10, 1e-20]
        json.dumps(d)


class TestExperimentReport:
    def test_save_serializes_numpy(self, tmp_path):
        report = ExperimentReport(
            name="trace",
            inputs={"n": np.int64(4), "source": NullSource.CL, "path": Path("x.csv")},
            trace=[0.5, 0.25],
            summary={"beta": np.array([1.0, 2.0])},
        )
        path = tmp_path / "out" / "report.json"
        report.save(path)
        data = json.loads(path.read_text())
        assert data["inputs"] == {"n": 4, "source": "cl", "path": "x.csv"}
        assert data["summary"]["beta"] == [1.0, 2.0]
        assert data["trace"] == [0.5, 0.25]

    def test_to_jsonable_rejects_unknown(self):
        with pytest.raises(TypeError):
            to_jsonable(object())
