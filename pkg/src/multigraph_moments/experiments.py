"""Desk-scale experiments: synthetic degree sequences, solver traces, perturbation
tests, estimator comparisons and the modularity landscape.

Every function returns an ``ExperimentReport`` and is deterministic given its
inputs and seed.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import special

from multigraph_moments import io
from multigraph_moments.domain import (
    DegreeSequenceError,
    ExperimentReport,
    MomentEstimates,
    SolveNotConvergedError,
)
from multigraph_moments.estimators import cl_estimate, relative_error, uniform_estimate
from multigraph_moments.graph import DegreeSequence, Multigraph
from multigraph_moments.log import Logger
from multigraph_moments.mcmc import ChainConfig, mc_estimates, run_chain
from multigraph_moments.modularity import cross_evaluate, modularity_matrix, msp
from multigraph_moments.solver import SolverConfig, solve

ZIPF_CAP = 10**6
MACHINE_EPSILON = float(np.finfo(float).eps)
DEFAULT_THRESHOLDS = (1e-6, 1e-12, MACHINE_EPSILON)


# --- synthetic degree sequences ---


def synthetic_uniform_sequence(
    n: int, seed: int = 20200229, low: int = 0, high: int = 50
) -> DegreeSequence:
    """n draws of 2(u + 1) with u uniform on {low, ..., high}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if low < 0 or high < low:
        raise ValueError(f"need 0 <= low <= high, got [{low}, {high}]")
    u = np.random.default_rng(seed).integers(low, high, size=n, endpoint=True)
    return DegreeSequence(2 * (u + 1))


def zipf_truncation_mass(alpha: float, cap: int = ZIPF_CAP) -> float:
    """Probability mass of Zipf(alpha) above ``cap``, dropped by the truncated sampler."""
    if alpha <= 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    return float(special.zeta(alpha, cap + 1) / special.zeta(alpha))


@dataclasses.dataclass(frozen=True)
class ZipfSample:
    """A realizable Zipf degree sequence and how it was drawn."""

    sequence: DegreeSequence
    redraws: int
    truncation_mass: float

    def to_dict(self) -> dict[str, object]:
        return {
            "n": self.sequence.n,
            "m": self.sequence.m,
            "redraws": self.redraws,
            "truncation_mass": self.truncation_mass,
        }


def draw_zipf_sequence(
    n: int,
    alpha: float = 2.0,
    seed: int = 20200229,
    cap: int = ZIPF_CAP,
    max_redraws: int = 1000,
) -> ZipfSample:
    """n draws of 2z, z ~ Zipf(alpha) truncated to {1, ..., cap} and renormalised.

    A draw whose largest degree exceeds half the degree sum has no loopless
    multigraph and is replaced by a fresh draw from the same generator.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if alpha <= 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    support = np.arange(1, cap + 1, dtype=float)
    cdf = np.cumsum(support**-alpha)
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    for redraws in range(max_redraws + 1):
        z = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), cap - 1) + 1
        d = DegreeSequence(2 * z.astype(np.int64))
        if d.is_realizable():
            return ZipfSample(d, redraws, zipf_truncation_mass(alpha, cap))
    raise DegreeSequenceError(f"no realizable Zipf sequence in {max_redraws + 1} draws")


def synthetic_zipf_sequence(
    n: int, alpha: float = 2.0, seed: int = 20200229, cap: int = ZIPF_CAP
) -> DegreeSequence:
    return draw_zipf_sequence(n, alpha, seed, cap).sequence


# --- solver behaviour ---


def _degrees(d: DegreeSequence | Sequence[int] | np.ndarray) -> DegreeSequence:
    return d if isinstance(d, DegreeSequence) else DegreeSequence(np.asarray(d))


def convergence_trace(
    d: DegreeSequence | Sequence[int] | np.ndarray,
    cfg: SolverConfig | None = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    *,
    logger: Logger | None = None,
) -> ExperimentReport:
    """Solve once down to the smallest threshold and report sweeps needed for each.

    Thresholds apply to n^-1 ||h - d||^2. The unsquared n^-1 ||h - d|| is
    recorded alongside. Rises in the trace after the first sweep are reported
    as warnings, not errors.
    """
    if not thresholds:
        raise ValueError("at least one threshold is required")
    degrees = _degrees(d)
    cfg = cfg or SolverConfig()
    run_cfg = dataclasses.replace(cfg, tol=min(cfg.tol, *thresholds))
    est = solve(degrees, run_cfg, logger=logger)

    trace = np.asarray(est.mse_trace, dtype=float)
    sweeps_to: dict[str, int | None] = {}
    for threshold in thresholds:
        hits = np.flatnonzero(trace <= threshold)
        sweeps_to[f"{threshold:.3g}"] = int(hits[0]) + 1 if hits.size else None

    rises = [int(i) + 2 for i in np.flatnonzero(np.diff(trace) > 0)]
    if rises and logger:
        logger.warn("MSE increased between sweeps", sweeps=rises[:10], count=len(rises))

    return ExperimentReport(
        name="convergence_trace",
        inputs={"n": degrees.n, "m": degrees.m, "thresholds": list(thresholds)},
        trace=trace.tolist(),
        summary={
            "sweeps": est.iterations,
            "sweeps_to": sweeps_to,
            "initial_mse": est.initial_mse,
            "final_mse": est.final_mse,
            "norm_trace": (np.sqrt(trace * degrees.n) / degrees.n).tolist(),
            "converged": est.converged,
            "stop_reason": est.stop_reason.value,
            "mse_increases": rises,
        },
    )


def bootstrap_u_test(
    d: DegreeSequence | Sequence[int] | np.ndarray,
    trials: int = 100,
    seed: int = 20200229,
    cfg: SolverConfig | None = None,
    *,
    out_dir: Path | None = None,
    logger: Logger | None = None,
) -> ExperimentReport:
    """Change in beta when two distinct degrees are each raised by one.

    Each trial draws i != j, solves d + e_i + e_j warm-started at the base
    solution and records the max-norm and mean absolute change. Trials whose
    solve does not converge are counted and left out of the summaries.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    degrees = _degrees(d)
    if degrees.n < 2:
        raise ValueError("perturbation needs at least two nodes")
    cfg = cfg or SolverConfig()
    base = solve(degrees, cfg, logger=logger)
    if not base.converged:
        raise SolveNotConvergedError(
            f"base solve did not converge ({base.stop_reason.value}, mse={base.final_mse:.3g})",
            base,
        )
    base_beta = base.beta.copy()
    warm = dataclasses.replace(cfg, beta0=tuple(float(b) for b in base_beta))

    rng = np.random.default_rng(seed)
    rows: list[dict[str, object]] = []
    for trial in range(trials):
        i, j = (int(v) for v in rng.choice(degrees.n, size=2, replace=False))
        perturbed = degrees.d.copy()
        perturbed[i] += 1
        perturbed[j] += 1
        est = solve(DegreeSequence(perturbed), warm)
        change = est.beta - base_beta
        rows.append(
            {
                "trial": trial,
                "i": i,
                "j": j,
                "converged": est.converged,
                "max_abs_change": float(np.abs(change).max()),
                "mean_abs_change": float(np.abs(change).mean()),
                "sweeps": est.iterations,
            }
        )
        if logger:
            logger.debug("bootstrap trial", **rows[-1])

    frame = pd.DataFrame(rows)
    ok = frame[frame["converged"]]
    summary: dict[str, object] = {
        "trials": trials,
        "failed": int((~frame["converged"]).sum()),
        "max_inf_change": float(ok["max_abs_change"].max()) if len(ok) else None,
        "mean_inf_change": float(ok["max_abs_change"].mean()) if len(ok) else None,
        "max_mean_abs_change": float(ok["mean_abs_change"].max()) if len(ok) else None,
        "mean_abs_change": float(ok["mean_abs_change"].mean()) if len(ok) else None,
        "all_within_one": bool((ok["max_abs_change"] <= 1).all()),
    }
    if logger:
        logger.info("Bootstrap finished", **summary)

    report = ExperimentReport(
        name="bootstrap_u",
        inputs={"n": degrees.n, "m": degrees.m, "trials": trials, "seed": seed},
        trace=list(base.mse_trace),
        summary=summary,
    )
    if out_dir is not None:
        path = out_dir / f"bootstrap_u_seed{seed}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g")
        report.artifacts.append(str(path))
    return report


def approximation_gap(
    d: DegreeSequence | Sequence[int] | np.ndarray,
    cfg: SolverConfig | None = None,
    *,
    logger: Logger | None = None,
) -> ExperimentReport:
    """How far beta sits from d, and the uniform estimate from Chung-Lu.

    Reports ||beta - d||_inf / ||d||_inf, max|W^I - W^CL| / max W^CL and the mean
    absolute relative difference of the two null matrices.
    """
    degrees = _degrees(d)
    est = solve(degrees, cfg, logger=logger)
    uniform = uniform_estimate(est)
    cl = cl_estimate(degrees)
    deg = degrees.d.astype(float)
    return ExperimentReport(
        name="approximation_gap",
        inputs={"n": degrees.n, "m": degrees.m},
        trace=list(est.mse_trace),
        summary={
            "converged": est.converged,
            "beta_gap": float(np.abs(est.beta - deg).max() / np.abs(deg).max()),
            "omega_gap": float(np.abs(uniform.omega - cl.omega).max() / cl.omega.max()),
            "null_mean_rel_diff": relative_error(uniform.omega, cl.omega).mean_abs,
        },
    )


# --- estimator accuracy ---


def estimator_comparison(
    g: Multigraph,
    mcmc_cfg: ChainConfig,
    solver_cfg: SolverConfig | None = None,
    reference: MomentEstimates | None = None,
    *,
    out_dir: Path | None = None,
    logger: Logger | None = None,
) -> ExperimentReport:
    """Relative error of the Chung-Lu and uniform estimates against a chain reference.

    When ``reference`` is given (an exact oracle, or a chain run elsewhere) no chain is run.
    """
    degrees = g.degrees
    cl = cl_estimate(degrees)
    est = solve(degrees, solver_cfg, logger=logger)
    if not est.converged and logger:
        logger.warn("beta solve did not converge; uniform estimate is approximate")
    uniform = uniform_estimate(est)

    if reference is None:
        reference = mc_estimates(run_chain(g, mcmc_cfg, logger=logger))

    err_cl = relative_error(cl.omega, reference.omega)
    err_uniform = relative_error(uniform.omega, reference.omega)
    row_sums = uniform.omega.sum(axis=1)
    summary: dict[str, object] = {
        "mean_abs_rel_error_cl": err_cl.mean_abs,
        "mean_abs_rel_error_uniform_I": err_uniform.mean_abs,
        "improvement": err_cl.mean_abs / err_uniform.mean_abs
        if err_uniform.mean_abs > 0
        else float("inf"),
        "pairs": err_uniform.pairs,
        "excluded_pairs": err_uniform.excluded_pairs,
        "beta_converged": est.converged,
        "max_row_sum_error": float(np.abs(row_sums - degrees.d).max()),
    }
    if reference.chi is not None and uniform.chi is not None and np.any(reference.chi > 0):
        summary["mean_abs_rel_error_chi"] = relative_error(uniform.chi, reference.chi).mean_abs
    if reference.sigma is not None and uniform.sigma is not None and np.any(reference.sigma > 0):
        summary["mean_abs_rel_error_sigma"] = relative_error(
            uniform.sigma, reference.sigma
        ).mean_abs

    report = ExperimentReport(
        name="estimator_comparison",
        inputs={"n": g.n, "m": g.m, "reference": reference.source.value, **mcmc_cfg.to_dict()},
        trace=list(est.mse_trace),
        summary=summary,
    )
    if out_dir is not None:
        path = out_dir / f"comparison_seed{mcmc_cfg.seed}.csv"
        io.write_comparison_csv(
            path, g.labels, reference.omega, {"cl": cl.omega, "uniform_I": uniform.omega}
        )
        report.artifacts.append(str(path))
    if logger:
        logger.info(
            "Estimator comparison",
            cl=err_cl.mean_abs,
            uniform_I=err_uniform.mean_abs,
            excluded_pairs=err_uniform.excluded_pairs,
        )
    return report


# --- modularity ---


def msp_landscape(
    g: Multigraph,
    nulls: Mapping[str, MomentEstimates],
    ks: Sequence[int],
    batches: int = 100,
    restarts: int = 50,
    seed: int = 20200229,
    *,
    threads: int = 1,
    logger: Logger | None = None,
) -> ExperimentReport:
    """Best Q over ``batches`` MSP runs per (null, k), each run with ``restarts`` restarts.

    The best partition found for each (null, k) is also scored against every
    other null.
    """
    if batches < 1:
        raise ValueError(f"batches must be >= 1, got {batches}")
    matrices = {name: modularity_matrix(g, null) for name, null in nulls.items()}
    rows: list[dict[str, object]] = []
    for name, mm in matrices.items():
        for k in ks:
            batch_seeds = np.random.SeedSequence([seed, k]).spawn(batches)
            best = None
            qs: list[float] = []
            for seq in batch_seeds:
                part = msp(
                    mm, k, restarts, int(seq.generate_state(1)[0]), threads=threads
                )
                qs.append(part.q)
                if best is None or part.q > best.q:
                    best = part
            assert best is not None
            row: dict[str, object] = {
                "null": name,
                "k": k,
                "q_mean": float(np.mean(qs)),
                "q_std": float(np.std(qs, ddof=1)) if len(qs) > 1 else 0.0,
                "q_best": best.q,
                "k_used": best.k_used,
            }
            for other_name, other in matrices.items():
                if other_name != name:
                    row[f"q_on_{other_name}"] = cross_evaluate(best, other)
            rows.append(row)
            if logger:
                logger.info("MSP landscape point", **row)

    return ExperimentReport(
        name="msp_landscape",
        inputs={
            "n": g.n,
            "m": g.m,
            "nulls": list(nulls),
            "ks": list(ks),
            "batches": batches,
            "restarts": restarts,
            "seed": seed,
        },
        summary={"points": rows},
    )
