from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np

from multigraph_moments.config import MomentsConfig
from multigraph_moments.domain import BetaEstimate, MomentEstimates, NullSource
from multigraph_moments.estimators import cl_estimate, uniform_estimate
from multigraph_moments.graph import DegreeSequence, Multigraph, realize
from multigraph_moments.log import Logger
from multigraph_moments.mcmc import ChainConfig, mc_estimates, run_chains
from multigraph_moments.modularity import ModularityMatrix, Partition, msp
from multigraph_moments.modularity import modularity_matrix as _modularity_matrix
from multigraph_moments.solver import SolverConfig, solve


class NullModel:
    """Fluent interface over the null-model estimators for one degree sequence."""

    def __init__(
        self,
        degrees: DegreeSequence | Sequence[int] | np.ndarray,
        *,
        graph: Multigraph | None = None,
        seed: int | None = None,
        tol: float | None = None,
        max_sweeps: int | None = None,
        samples: int | None = None,
        dt: int | None = None,
        burn_in: int | None = None,
        model: str | None = None,
        threads: int | None = None,
        project_root: str | Path | None = None,
        logger: Logger | None = None,
    ) -> None:
        root = Path(project_root) if project_root else Path.cwd()

        explicit: dict[str, object] = {
            "seed": seed,
            "tol": tol,
            "max_sweeps": max_sweeps,
            "samples": samples,
            "dt": dt,
            "burn_in": burn_in,
            "model": model,
            "threads": threads,
        }
        self._config = MomentsConfig.resolve(explicit, project_root=root)
        self._degrees = (
            degrees if isinstance(degrees, DegreeSequence) else DegreeSequence(np.asarray(degrees))
        )
        if graph is not None and not np.array_equal(graph.degrees.d, self._degrees.d):
            raise ValueError("graph degrees do not match the degree sequence")
        self._graph = graph
        self._logger = logger
        self._beta: BetaEstimate | None = None

    @classmethod
    def from_graph(cls, g: Multigraph, **kwargs: object) -> NullModel:
        return cls(g.degrees, graph=g, **kwargs)  # type: ignore[arg-type]

    @property
    def config(self) -> MomentsConfig:
        return self._config

    @property
    def degrees(self) -> DegreeSequence:
        return self._degrees

    def solve(self) -> BetaEstimate:
        """Solve for beta once; later calls return the cached estimate."""
        if self._beta is None:
            self._beta = solve(
                self._degrees, SolverConfig.from_config(self._config), logger=self._logger
            )
        return self._beta

    def sample(self, cfg: ChainConfig | None = None, chains: int = 1) -> MomentEstimates:
        """Chain estimate of the moments, started from the graph or a realisation of d."""
        g0 = self._graph or realize(self._degrees)
        chain_cfg = cfg or ChainConfig.from_config(self._config, g0.m)
        acc = run_chains(g0, chain_cfg, chains, self._config.threads, logger=self._logger)
        return mc_estimates(acc)

    def expected(self, null: str | NullSource = NullSource.UNIFORM_I) -> MomentEstimates:
        source = NullSource(null)
        if source is NullSource.CL:
            return cl_estimate(self._degrees)
        if source is NullSource.UNIFORM_I:
            return uniform_estimate(self.solve())
        if source is NullSource.MCMC:
            return self.sample()
        raise ValueError(f"no built-in estimate for null {source.value!r}")

    def modularity_matrix(
        self, g: Multigraph | None = None, null: str | NullSource = NullSource.UNIFORM_I
    ) -> ModularityMatrix:
        graph = self._require_graph(g)
        source = NullSource(null)
        return _modularity_matrix(graph, self.expected(source), source)

    def partition(
        self,
        g: Multigraph | None = None,
        null: str | NullSource = NullSource.UNIFORM_I,
        k: int | None = None,
        restarts: int | None = None,
    ) -> Partition:
        cfg = self._config
        return msp(
            self.modularity_matrix(g, null),
            k or cfg.k,
            restarts or cfg.restarts,
            cfg.seed,
            threads=cfg.threads,
            logger=self._logger,
        )

    def _require_graph(self, g: Multigraph | None) -> Multigraph:
        graph = g or self._graph
        if graph is None:
            raise ValueError("a graph is required. Pass it to NullModel.from_graph() or here.")
        if not np.array_equal(graph.degrees.d, self._degrees.d):
            raise ValueError("graph degrees do not match the degree sequence")
        return graph
