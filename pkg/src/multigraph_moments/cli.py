from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from multigraph_moments import __version__, experiments, io
from multigraph_moments.config import ROOT_METHODS, MomentsConfig
from multigraph_moments.domain import (
    ChainError,
    ChainTarget,
    DataError,
    ExitCode,
    ExperimentReport,
    MomentEstimates,
    NullSource,
    NumericalError,
    SolveNotConvergedError,
)
from multigraph_moments.estimators import cl_estimate, uniform_estimate
from multigraph_moments.graph import (
    LAYOUTS,
    DegreeSequence,
    Multigraph,
    from_edge_list,
    read_edge_list,
    realize,
    temporal_threshold,
)
from multigraph_moments.log import Logger
from multigraph_moments.mcmc import ChainConfig, mc_estimates, run_chains
from multigraph_moments.modularity import modularity_matrix, modularity_score, msp
from multigraph_moments.oracle import enumerate_ensemble, oracle_moments
from multigraph_moments.solver import SolverConfig, solve

Handler = Callable[[argparse.Namespace, MomentsConfig, Logger], ExitCode]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(value: str) -> int:
    n = int(value)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {n}")
    return n


def _nonnegative_int(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative integer, got {n}")
    return n


def _positive_float(value: str) -> float:
    x = float(value)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {x}")
    return x


# --- parser ---


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: 20200229)")
    p.add_argument("--out", default=None, help="Output directory (default: out/)")
    p.add_argument("--threads", type=_positive_int, default=None, help="Worker count")
    p.add_argument(
        "--log-format", choices=("text", "json"), default=None, help="Default: $LOG_FORMAT"
    )


def _graph_input(p: argparse.ArgumentParser, *, degrees: bool) -> None:
    p.add_argument("--edges", default=None, help="Edge list file ('u v [t]' per line)")
    p.add_argument("--layout", choices=LAYOUTS, default="uvt", help="Column order (default: uvt)")
    p.add_argument(
        "--fraction",
        type=_positive_float,
        default=None,
        help="Keep the most recent fraction of timestamped edges (default: 1.0)",
    )
    p.add_argument(
        "--skip-self-loops", action="store_true", help="Drop self-loop records instead of failing"
    )
    if degrees:
        p.add_argument("--degrees", default=None, help="Degree file (one per line or CSV)")


def _solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=_positive_float, default=None, help="MSE tolerance")
    p.add_argument("--max-sweeps", type=_positive_int, default=None, help="Sweep limit")
    p.add_argument("--root-method", choices=ROOT_METHODS, default=None)


def _chain_options(p: argparse.ArgumentParser, *, model_flag: str = "--model") -> None:
    p.add_argument(
        model_flag,
        dest="model",
        choices=[t.value for t in ChainTarget],
        default=None,
        help="Chain target (default: uniform)",
    )
    p.add_argument("--samples", type=_positive_int, default=None, help="Recorded states")
    p.add_argument("--dt", type=_positive_int, default=None, help="Proposals between samples")
    p.add_argument("--burn-in", type=_nonnegative_int, default=None, help="Burn-in proposals")
    p.add_argument("--batches", type=_positive_int, default=None, help="Batches for errors")
    p.add_argument("--chains", type=_positive_int, default=1, help="Independent chains")


def _null_option(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--null",
        choices=[NullSource.CL.value, NullSource.UNIFORM_I.value, NullSource.MCMC.value],
        default=None,
        help="Null expectation (default: uniform-I)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="multigraph-moments",
        description="Null models for multigraphs with a fixed degree sequence",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="Edge list to multigraph, edge and degree files")
    _common(p)
    _graph_input(p, degrees=False)

    p = sub.add_parser("sample", help="Run the edge-swap chain and write moment estimates")
    _common(p)
    _graph_input(p, degrees=True)
    _chain_options(p)

    p = sub.add_parser("solve-beta", help="Solve h(beta) = d")
    _common(p)
    _graph_input(p, degrees=True)
    _solver_options(p)

    p = sub.add_parser("estimate", help="Estimate the expected adjacency matrix")
    _common(p)
    _graph_input(p, degrees=True)
    _solver_options(p)
    p.add_argument(
        "--model",
        dest="estimator",
        choices=[NullSource.CL.value, NullSource.UNIFORM_I.value, NullSource.MCMC.value],
        default=NullSource.UNIFORM_I.value,
        help="Estimator (default: uniform-I)",
    )
    _chain_options(p, model_flag="--chain-model")

    p = sub.add_parser("compare", help="Relative error of CL and uniform-I against the chain")
    _common(p)
    _graph_input(p, degrees=False)
    _solver_options(p)
    _chain_options(p)

    p = sub.add_parser("bootstrap-u", help="Perturbation test of beta under d + e_i + e_j")
    _common(p)
    _graph_input(p, degrees=True)
    _solver_options(p)
    p.add_argument("--trials", type=_positive_int, default=100, help="Perturbations")
    p.add_argument(
        "--synthetic",
        choices=("uniform", "zipf"),
        default=None,
        help="Generate the degree sequence instead of reading one",
    )
    p.add_argument("--n", type=_positive_int, default=200, help="Synthetic sequence length")

    p = sub.add_parser("modularity", help="Q of a given partition")
    _common(p)
    _graph_input(p, degrees=False)
    _solver_options(p)
    _null_option(p)
    p.add_argument("--partition", required=True, help="Partition CSV (node_id,label)")

    p = sub.add_parser("msp", help="Multiway spectral partitioning")
    _common(p)
    _graph_input(p, degrees=False)
    _solver_options(p)
    _null_option(p)
    p.add_argument("--k", type=_positive_int, default=None, help="Communities (default: 2)")
    p.add_argument("--restarts", type=_positive_int, default=None, help="Default: 50")

    p = sub.add_parser("enumerate", help="Exact moments of a tiny degree sequence")
    _common(p)
    p.add_argument("--degrees", required=True, help="Degree file (one per line or CSV)")
    p.add_argument("--model", choices=[t.value for t in ChainTarget], default=None)
    p.add_argument("--max-edges", type=_positive_int, default=None, help="Default: 8")

    return parser


# --- inputs ---

_CONFIG_FLAGS = (
    "seed",
    "tol",
    "max_sweeps",
    "root_method",
    "dt",
    "samples",
    "burn_in",
    "batches",
    "model",
    "null",
    "k",
    "restarts",
    "threads",
    "fraction",
    "max_edges",
)


def _explicit(args: argparse.Namespace) -> dict[str, object]:
    """CLI flags that map onto MomentsConfig fields; unset flags are left to other layers."""
    explicit = {name: getattr(args, name, None) for name in _CONFIG_FLAGS}
    if getattr(args, "out", None) is not None:
        explicit["out"] = Path(args.out)
    return explicit


def _load_graph(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> Multigraph:
    if not args.edges:
        raise ValueError("--edges is required")
    records = read_edge_list(Path(args.edges), args.layout)
    if cfg.fraction < 1:
        before = len(records)
        records = temporal_threshold(records, cfg.fraction)
        logger.info("Temporal threshold", fraction=cfg.fraction, kept=len(records), of=before)
    return from_edge_list(records, skip_self_loops=args.skip_self_loops, logger=logger)


def _load_degrees(
    args: argparse.Namespace, cfg: MomentsConfig, logger: Logger
) -> tuple[DegreeSequence, Multigraph | None]:
    if getattr(args, "degrees", None):
        if args.edges:
            raise ValueError("pass either --degrees or --edges, not both")
        return io.read_degrees(Path(args.degrees)), None
    if args.edges:
        g = _load_graph(args, cfg, logger)
        return g.degrees, g
    raise ValueError("--degrees or --edges is required")


def _null_estimate(
    g: Multigraph, null: NullSource, cfg: MomentsConfig, logger: Logger
) -> MomentEstimates:
    if null is NullSource.CL:
        return cl_estimate(g.degrees)
    if null is NullSource.UNIFORM_I:
        est = solve(g.degrees, SolverConfig.from_config(cfg), logger=logger)
        if not est.converged:
            logger.warn("beta solve did not converge", stop_reason=est.stop_reason.value)
        return uniform_estimate(est)
    acc = run_chains(g, ChainConfig.from_config(cfg, g.m), 1, logger=logger)
    return mc_estimates(acc)


def _write_moments(out: Path, est: MomentEstimates, ids: Sequence[object]) -> list[str]:
    written: list[str] = []
    for name in ("omega", "chi", "sigma", "eps", "omega_se", "chi_se"):
        value = getattr(est, name)
        if value is None:
            continue
        path = out / f"{name}.csv"
        io.write_matrix_csv(path, value, ids)  # type: ignore[arg-type]
        written.append(str(path))
    io.write_matrix_json(out / "omega.json", est.omega, ids)  # type: ignore[arg-type]
    written.append(str(out / "omega.json"))
    return written


# --- subcommands ---


def _cmd_ingest(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    g = _load_graph(args, cfg, logger)
    io.write_edge_list(cfg.out / "edges.txt", g)
    io.write_degrees(cfg.out / "degrees.csv", g.degrees)
    meta = io.run_metadata(
        command="ingest",
        source=args.edges,
        n=g.n,
        m=g.m,
        simple=g.is_simple,
        fraction=cfg.fraction,
    )
    io.write_json(cfg.out / "ingest.json", meta)
    return ExitCode.OK


def _cmd_sample(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    d, g = _load_degrees(args, cfg, logger)
    g0 = g or realize(d)
    chain_cfg = ChainConfig.from_config(cfg, g0.m)
    acc = run_chains(g0, chain_cfg, args.chains, cfg.threads, logger=logger)
    est = mc_estimates(acc)
    artifacts = _write_moments(cfg.out, est, g0.labels)
    meta = io.run_metadata(
        command="sample",
        chains=args.chains,
        artifacts=artifacts,
        **chain_cfg.to_dict(),
        **acc.acceptance(),
    )
    io.write_json(cfg.out / "sample.json", meta)
    return ExitCode.OK


def _cmd_solve_beta(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    d, _ = _load_degrees(args, cfg, logger)
    est = solve(d, SolverConfig.from_config(cfg), logger=logger)
    io.write_beta_csv(cfg.out / "beta.csv", d.labels, d.d, est.beta)
    io.write_trace_csv(cfg.out / "trace.csv", est.mse_trace, d.n)
    meta = io.run_metadata(command="solve-beta", tol=cfg.tol, **est.to_dict())
    io.write_json(cfg.out / "solve.json", meta)
    if not est.converged:
        logger.warn("beta solve did not converge", stop_reason=est.stop_reason.value)
        return ExitCode.NON_CONVERGENCE
    return ExitCode.OK


def _cmd_estimate(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    d, g = _load_degrees(args, cfg, logger)
    estimator = NullSource(args.estimator)
    code = ExitCode.OK
    extra: dict[str, object] = {}
    if estimator is NullSource.CL:
        est = cl_estimate(d)
    elif estimator is NullSource.UNIFORM_I:
        beta = solve(d, SolverConfig.from_config(cfg), logger=logger)
        extra = beta.to_dict()
        if not beta.converged:
            logger.warn("beta solve did not converge", stop_reason=beta.stop_reason.value)
            code = ExitCode.NON_CONVERGENCE
        est = uniform_estimate(beta)
    else:
        g0 = g or realize(d)
        chain_cfg = ChainConfig.from_config(cfg, g0.m)
        acc = run_chains(g0, chain_cfg, args.chains, cfg.threads, logger=logger)
        est = mc_estimates(acc)
        extra = {**chain_cfg.to_dict(), **acc.acceptance()}
    artifacts = _write_moments(cfg.out, est, d.labels)
    fields: dict[str, object] = {"seed": cfg.seed, **extra}
    meta = io.run_metadata(
        command="estimate", estimator=estimator.value, artifacts=artifacts, **fields
    )
    io.write_json(cfg.out / "estimate.json", meta)
    return code


def _cmd_compare(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    g = _load_graph(args, cfg, logger)
    report = experiments.estimator_comparison(
        g,
        ChainConfig.from_config(cfg, g.m),
        SolverConfig.from_config(cfg),
        out_dir=cfg.out,
        logger=logger,
    )
    report.save(cfg.out / "comparison.json")
    io.write_json(cfg.out / "compare.json", io.run_metadata(command="compare", seed=cfg.seed))
    return ExitCode.OK if report.summary["beta_converged"] else ExitCode.NON_CONVERGENCE


def _cmd_bootstrap_u(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    drawn: dict[str, object] = {}
    if args.synthetic == "uniform":
        d = experiments.synthetic_uniform_sequence(args.n, cfg.seed)
    elif args.synthetic == "zipf":
        sample = experiments.draw_zipf_sequence(args.n, seed=cfg.seed)
        d = sample.sequence
        drawn = sample.to_dict()
        logger.info("Zipf sequence drawn", **drawn)
    else:
        d, _ = _load_degrees(args, cfg, logger)
    report_path = cfg.out / f"bootstrap_u_seed{cfg.seed}.json"
    meta = io.run_metadata(command="bootstrap-u", seed=cfg.seed, synthetic=args.synthetic, **drawn)
    try:
        report = experiments.bootstrap_u_test(
            d, args.trials, cfg.seed, SolverConfig.from_config(cfg), out_dir=cfg.out, logger=logger
        )
    except SolveNotConvergedError as exc:
        logger.error(f"ERROR: {exc}")
        ExperimentReport(
            name="bootstrap_u",
            inputs={"n": d.n, "m": d.m, "trials": args.trials, "seed": cfg.seed},
            trace=list(exc.estimate.mse_trace),
            summary={"base": exc.estimate.to_dict()},
        ).save(report_path)
        io.write_json(cfg.out / "bootstrap-u.json", meta)
        return ExitCode.NON_CONVERGENCE
    report.save(report_path)
    io.write_json(cfg.out / "bootstrap-u.json", meta)
    return ExitCode.OK


def _cmd_modularity(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    g = _load_graph(args, cfg, logger)
    null = NullSource(cfg.null)
    mm = modularity_matrix(g, _null_estimate(g, null, cfg, logger), null)
    labels = io.read_partition_csv(Path(args.partition), g.labels)
    q = modularity_score(mm, labels)
    logger.info("Modularity", q=q, null=null.value)
    meta = io.run_metadata(
        command="modularity", Q=q, null_source=null.value, k_used=int(np.unique(labels).size)
    )
    io.write_json(cfg.out / "modularity.json", meta)
    return ExitCode.OK


def _cmd_msp(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    g = _load_graph(args, cfg, logger)
    null = NullSource(cfg.null)
    mm = modularity_matrix(g, _null_estimate(g, null, cfg, logger), null)
    part = msp(mm, cfg.k, cfg.restarts, cfg.seed, threads=cfg.threads, logger=logger)
    io.write_partition_csv(cfg.out / "partition.csv", g.labels, part.labels)
    meta = io.run_metadata(
        command="msp", seed=cfg.seed, restarts=cfg.restarts, **part.to_dict()
    )
    io.write_json(cfg.out / "msp.json", meta)
    return ExitCode.OK


def _cmd_enumerate(args: argparse.Namespace, cfg: MomentsConfig, logger: Logger) -> ExitCode:
    d = io.read_degrees(Path(args.degrees))
    ensemble = enumerate_ensemble(d, cfg.max_edges)
    model = ChainTarget(cfg.model)
    est = oracle_moments(ensemble, model)
    artifacts = _write_moments(cfg.out, est, d.labels)
    logger.info("Enumerated ensemble", graphs=len(ensemble), model=model.value)
    meta = io.run_metadata(
        command="enumerate", model=model.value, graphs=len(ensemble), artifacts=artifacts
    )
    io.write_json(cfg.out / "enumerate.json", meta)
    return ExitCode.OK


_HANDLERS: dict[str, Handler] = {
    "ingest": _cmd_ingest,
    "sample": _cmd_sample,
    "solve-beta": _cmd_solve_beta,
    "estimate": _cmd_estimate,
    "compare": _cmd_compare,
    "bootstrap-u": _cmd_bootstrap_u,
    "modularity": _cmd_modularity,
    "msp": _cmd_msp,
    "enumerate": _cmd_enumerate,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run one subcommand and return its exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command is None:
        parser.print_help()
        return ExitCode.OK

    json_mode = None if args.log_format is None else args.log_format == "json"
    try:
        cfg = MomentsConfig.resolve(_explicit(args))
    except ValueError as exc:
        Logger(json_mode=json_mode).error(f"ERROR: {exc}")
        return ExitCode.USAGE

    logger = Logger(log_file=cfg.out / "run.log", json_mode=json_mode)
    logger.stage_start(args.command, seed=cfg.seed, out=cfg.out)
    try:
        code = _HANDLERS[args.command](args, cfg, logger)
    except (DataError, ChainError) as exc:
        logger.error(f"ERROR: {exc}")
        logger.stage_end(args.command, "failed", exit_code=int(ExitCode.DATA))
        return ExitCode.DATA
    except NumericalError as exc:
        logger.error(f"ERROR: {exc}")
        logger.stage_end(args.command, "failed", exit_code=int(ExitCode.NON_CONVERGENCE))
        return ExitCode.NON_CONVERGENCE
    except ValueError as exc:
        logger.error(f"ERROR: {exc}")
        logger.stage_end(args.command, "failed", exit_code=int(ExitCode.USAGE))
        return ExitCode.USAGE

    result = "ok" if code is ExitCode.OK else "not_converged"
    logger.stage_end(args.command, result, exit_code=int(code))
    return code


def main() -> None:
    sys.exit(run())
