"""Tests for synthetic sequences and the experiment drivers."""

import math

import numpy as np
import pandas as pd
import pytest

from multigraph_moments.domain import (
    ChainTarget,
    DegreeSequenceError,
    NumericalError,
    SolveNotConvergedError,
)
from multigraph_moments.estimators import cl_estimate, uniform_estimate
from multigraph_moments.experiments import (
    approximation_gap,
    bootstrap_u_test,
    convergence_trace,
    draw_zipf_sequence,
    estimator_comparison,
    msp_landscape,
    synthetic_uniform_sequence,
    synthetic_zipf_sequence,
    zipf_truncation_mass,
)
from multigraph_moments.mcmc import ChainConfig
from multigraph_moments.oracle import enumerate_ensemble, oracle_moments
from multigraph_moments.solver import SolverConfig, solve


class TestSyntheticSequences:
    def test_uniform_range_and_parity(self):
        d = synthetic_uniform_sequence(500)
        assert d.n == 500
        assert np.all(d.d % 2 == 0)
        assert d.d.min() >= 2
        assert d.d.max() <= 102

    def test_uniform_reproducible(self):
        a = synthetic_uniform_sequence(50, seed=3)
        b = synthetic_uniform_sequence(50, seed=3)
        assert np.array_equal(a.d, b.d)

    def test_uniform_validation(self):
        with pytest.raises(ValueError, match="n must be"):
            synthetic_uniform_sequence(0)
        with pytest.raises(ValueError, match="low"):
            synthetic_uniform_sequence(5, low=3, high=2)

    def test_zipf_even_and_reproducible(self):
        a = synthetic_zipf_sequence(200, seed=5, cap=1000)
        b = synthetic_zipf_sequence(200, seed=5, cap=1000)
        assert np.array_equal(a.d, b.d)
        assert np.all(a.d % 2 == 0)
        assert a.d.min() >= 2
        assert a.d.max() <= 2000

    def test_zipf_mostly_ones(self):
        d = synthetic_zipf_sequence(2000, seed=1, cap=1000)
        # P(z = 1) is about 6 / pi^2 for alpha = 2
        assert np.mean(d.d == 2) == pytest.approx(6 / math.pi**2, abs=0.05)

    def test_zipf_needs_alpha_above_one(self):
        with pytest.raises(ValueError, match="alpha"):
            synthetic_zipf_sequence(10, alpha=1.0)

    def test_zipf_draws_are_realizable(self):
        # the first draw for the default seed has one hub holding most of the stubs
        sample = draw_zipf_sequence(200)
        assert sample.redraws >= 1
        assert sample.sequence.is_realizable()
        assert np.array_equal(sample.sequence.d, synthetic_zipf_sequence(200).d)

    def test_zipf_sample_reports_redraws_and_truncation(self):
        info = draw_zipf_sequence(50, seed=5, cap=1000).to_dict()
        assert info["n"] == 50
        assert info["redraws"] >= 0
        assert info["truncation_mass"] == pytest.approx(zipf_truncation_mass(2.0, 1000))

    def test_zipf_gives_up_after_max_redraws(self):
        with pytest.raises(DegreeSequenceError, match="realizable"):
            draw_zipf_sequence(200, max_redraws=0)

    def test_truncation_mass(self):
        assert zipf_truncation_mass(2.0, cap=1) == pytest.approx(1 - 6 / math.pi**2)
        assert zipf_truncation_mass(2.0) < 1e-5


class TestConvergenceTrace:
    def test_reaches_every_threshold(self):
        d = synthetic_uniform_sequence(30, high=10)
        report = convergence_trace(d)
        summary = report.summary
        assert summary["converged"]
        reached = [summary["sweeps_to"][key] for key in ("1e-06", "1e-12", "2.22e-16")]
        assert all(s is not None for s in reached)
        assert reached == sorted(reached)
        assert len(report.trace) == summary["sweeps"]
        assert len(summary["norm_trace"]) == summary["sweeps"]

    def test_unreached_threshold(self, star5):
        report = convergence_trace(star5, SolverConfig(max_sweeps=20), thresholds=(1e-12,))
        assert not report.summary["converged"]
        assert report.summary["sweeps_to"]["1e-12"] is None

    def test_needs_thresholds(self):
        with pytest.raises(ValueError, match="threshold"):
            convergence_trace([2, 2, 2], thresholds=())


class TestBootstrap:
    def test_small_sequence(self, tmp_path):
        d = synthetic_uniform_sequence(20, seed=2, high=5)
        report = bootstrap_u_test(d, trials=5, seed=1, out_dir=tmp_path)
        summary = report.summary
        assert summary["trials"] == 5
        assert summary["failed"] == 0
        assert summary["all_within_one"]
        assert summary["max_inf_change"] >= summary["mean_inf_change"] > 0
        frame = pd.read_csv(tmp_path / "bootstrap_u_seed1.csv")
        assert len(frame) == 5
        assert (frame["i"] != frame["j"]).all()

    def test_base_must_converge(self, star5):
        with pytest.raises(NumericalError, match="base solve") as exc_info:
            bootstrap_u_test(star5, trials=1, cfg=SolverConfig(max_sweeps=200))
        assert isinstance(exc_info.value, SolveNotConvergedError)
        assert not exc_info.value.estimate.converged

    def test_validation(self):
        with pytest.raises(ValueError, match="trials"):
            bootstrap_u_test([2, 2, 2], trials=0)


class TestApproximationGap:
    def test_gap_shrinks_with_n(self):
        gaps = [approximation_gap(np.full(n, 4)).summary["beta_gap"] for n in (10, 50, 200)]
        assert gaps == sorted(gaps, reverse=True)
        # regular beta = 4 / (1 + 3/n)
        assert gaps[0] == pytest.approx(1 - 1 / 1.3, rel=1e-6)


class TestEstimatorComparison:
    def test_oracle_reference(self, four_cycle, tmp_path):
        exact = oracle_moments(enumerate_ensemble([2, 2, 2, 2]), ChainTarget.UNIFORM)
        report = estimator_comparison(
            four_cycle, ChainConfig(seed=4), reference=exact, out_dir=tmp_path
        )
        summary = report.summary
        assert summary["pairs"] == 6
        assert summary["excluded_pairs"] == 0
        # Chung-Lu gives 1/2 against an exact 2/3
        assert summary["mean_abs_rel_error_cl"] == pytest.approx(0.25)
        assert summary["mean_abs_rel_error_uniform_I"] < 1e-4
        assert "mean_abs_rel_error_chi" in summary
        assert report.inputs["reference"] == "oracle"
        assert (tmp_path / "comparison_seed4.csv").exists()

    def test_chain_reference(self, two_triangles):
        cfg = ChainConfig(samples=200, seed=1)
        report = estimator_comparison(two_triangles, cfg)
        summary = report.summary
        assert summary["pairs"] + summary["excluded_pairs"] == 15
        assert summary["beta_converged"]
        assert report.inputs["seed"] == 1


class TestMspLandscape:
    def test_two_triangles(self, two_triangles):
        nulls = {
            "cl": cl_estimate(two_triangles.degrees),
            "uniform-I": uniform_estimate(solve(two_triangles.degrees)),
        }
        report = msp_landscape(two_triangles, nulls, ks=[2], batches=3, restarts=5, seed=9)
        points = report.summary["points"]
        assert [p["null"] for p in points] == ["cl", "uniform-I"]
        cl_point = points[0]
        assert cl_point["q_best"] == pytest.approx(2 / 3)
        assert cl_point["k_used"] == 2
        assert "q_on_uniform-I" in cl_point
        assert "q_on_cl" in points[1]

    def test_deterministic(self, two_triangles):
        nulls = {"cl": cl_estimate(two_triangles.degrees)}
        a = msp_landscape(two_triangles, nulls, ks=[2, 3], batches=2, restarts=3)
        b = msp_landscape(two_triangles, nulls, ks=[2, 3], batches=2, restarts=3)
        assert a.summary == b.summary

    def test_batches_validated(self, two_triangles):
        with pytest.raises(ValueError, match="batches"):
            msp_landscape(two_triangles, {}, ks=[2], batches=0)


@pytest.mark.slow
class TestLongExperiments:
    def test_uniform_sequence_full_size(self):
        report = convergence_trace(synthetic_uniform_sequence(200))
        assert report.summary["converged"]
        assert report.summary["sweeps_to"]["1e-12"] is not None

    def test_full_bootstrap(self):
        d = synthetic_uniform_sequence(200)
        report = bootstrap_u_test(d, trials=100)
        assert report.summary["failed"] == 0
        assert report.summary["all_within_one"]
