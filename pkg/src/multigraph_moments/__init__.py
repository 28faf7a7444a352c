from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("multigraph-moments")
except PackageNotFoundError:
    __version__ = "0.0.0+unknown"

from multigraph_moments.api import NullModel
from multigraph_moments.config import MomentsConfig
from multigraph_moments.domain import (
    BetaEstimate,
    ChainTarget,
    Classification,
    DataError,
    MomentEstimates,
    MultigraphMomentsError,
    NullSource,
    NumericalError,
)
from multigraph_moments.estimators import cl_estimate, relative_error, uniform_estimate
from multigraph_moments.graph import DegreeSequence, Multigraph, from_edge_list
from multigraph_moments.log import Logger
from multigraph_moments.mcmc import ChainConfig, mc_estimates, run_chain, run_chains
from multigraph_moments.modularity import modularity, modularity_matrix, msp
from multigraph_moments.oracle import enumerate_ensemble, oracle_moments
from multigraph_moments.solver import SolverConfig, solve

__all__ = [
    "BetaEstimate",
    "ChainConfig",
    "ChainTarget",
    "Classification",
    "DataError",
    "DegreeSequence",
    "Logger",
    "MomentEstimates",
    "MomentsConfig",
    "Multigraph",
    "MultigraphMomentsError",
    "NullModel",
    "NullSource",
    "NumericalError",
    "SolverConfig",
    "__version__",
    "cl_estimate",
    "enumerate_ensemble",
    "from_edge_list",
    "mc_estimates",
    "modularity",
    "modularity_matrix",
    "msp",
    "oracle_moments",
    "relative_error",
    "run_chain",
    "run_chains",
    "solve",
    "uniform_estimate",
]
