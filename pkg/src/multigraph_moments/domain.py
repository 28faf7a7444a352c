from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ChainTarget(enum.Enum):
    UNIFORM = "uniform"
    CONFIGURATION = "configuration"


class EstimateSource(enum.Enum):
    CL = "cl"
    UNIFORM_SOLVER = "uniform_solver"
    MCMC = "mcmc"
    ORACLE = "oracle"


class NullSource(enum.Enum):
    CL = "cl"
    UNIFORM_I = "uniform-I"
    MCMC = "mcmc"
    CUSTOM = "custom"


class Classification(enum.Enum):
    WELL_BEHAVED = "well_behaved"
    PHYSICAL = "physical"
    NEITHER = "neither"


class StopReason(enum.Enum):
    TOLERANCE = "tolerance"
    MAX_SWEEPS = "max_sweeps"
    NO_ROOT = "no_root"
    DIVERGED = "diverged"


class ExitCode(enum.IntEnum):
    OK = 0
    USAGE = 1
    DATA = 2
    NON_CONVERGENCE = 3


# --- errors ---


class MultigraphMomentsError(Exception):
    """Base class for all errors raised by this package."""


class DataError(MultigraphMomentsError):
    """Input data is malformed or violates a model precondition."""


class EdgeListParseError(DataError):
    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class SelfLoopError(DataError):
    pass


class EmptyGraphError(DataError):
    pass


class DegreeSequenceError(DataError):
    pass


class EnsembleTooLargeError(DataError):
    pass


class ChainError(MultigraphMomentsError):
    pass


class NumericalError(MultigraphMomentsError):
    pass


class DivergentKernelError(NumericalError):
    """Some f_ij(beta) >= 1, so f/(1-f) is undefined."""

    def __init__(self, pair: tuple[int, int], value: float) -> None:
        i, j = pair
        super().__init__(f"f[{i},{j}] = {value:.6g} >= 1; estimate diverges for pair ({i}, {j})")
        self.pair = pair
        self.value = value


class SolveNotConvergedError(NumericalError):
    """A solve the caller depends on stopped before converging."""

    def __init__(self, message: str, estimate: BetaEstimate) -> None:
        super().__init__(message)
        self.estimate = estimate


class BracketError(NumericalError):
    """A coordinate update could not bracket a root of h_i(b) = d_i."""

    def __init__(self, index: int, beta: np.ndarray, target: float, reason: str) -> None:
        super().__init__(f"coordinate {index} (d_i={target}): {reason}")
        self.index = index
        self.beta = beta.copy()
        self.target = target


# --- value objects ---


def _symmetric_zero_diagonal(name: str, a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, equal_nan=True):
        raise ValueError(f"{name} must be symmetric")
    if np.any(np.diag(a) != 0):
        raise ValueError(f"{name} must have a zero diagonal")


@dataclass(frozen=True)
class MomentEstimates:
    """First and second moments of W under a null model, from any source.

    ``sigma`` is the entrywise standard deviation of w_ij. ``second_moment`` (E[w_ij^2])
    and ``inner`` (E[w_i^T w_j]) are only filled by exact or sampled sources.
    """

    omega: np.ndarray
    source: EstimateSource
    chi: np.ndarray | None = None
    sigma: np.ndarray | None = None
    eps: np.ndarray | None = None
    beta: np.ndarray | None = None
    psi: float | None = None
    second_moment: np.ndarray | None = None
    inner: np.ndarray | None = None
    omega_se: np.ndarray | None = None
    chi_se: np.ndarray | None = None

    def __post_init__(self) -> None:
        _symmetric_zero_diagonal("omega", self.omega)
        if np.any(self.omega < 0):
            raise ValueError("omega must be nonnegative")
        for name in ("chi", "sigma", "eps"):
            value = getattr(self, name)
            if value is not None:
                if value.shape != self.omega.shape:
                    raise ValueError(f"{name} shape {value.shape} != omega shape")
                _symmetric_zero_diagonal(name, value)
        if self.chi is not None:
            upper = 1.0 if self.source is not EstimateSource.UNIFORM_SOLVER else np.nextafter(1, 0)
            if np.any(self.chi < 0) or np.any(self.chi > upper):
                raise ValueError("chi entries must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.omega.shape[0])

    @property
    def variance(self) -> np.ndarray | None:
        return None if self.sigma is None else self.sigma**2


@dataclass(frozen=True)
class BetaEstimate:
    """Solution of h(beta) = d with convergence metadata."""

    beta: np.ndarray
    degrees: np.ndarray
    iterations: int
    final_mse: float
    converged: bool
    classification: Classification
    delta: float
    stop_reason: StopReason
    mse_trace: tuple[float, ...] = ()
    residual: np.ndarray | None = None
    initial_mse: float = float("nan")

    @property
    def psi(self) -> float:
        return float(self.beta.sum()) / 2

    @property
    def n(self) -> int:
        return int(self.beta.shape[0])

    @property
    def residual_norm(self) -> float:
        """n^-1 ||h(beta) - d||_2, the unsquared variant of the stopping metric."""
        if self.residual is None:
            return float("nan")
        return float(np.linalg.norm(self.residual)) / self.n

    @property
    def omega_nonnegative(self) -> bool:
        b = self.beta
        f = np.outer(b, b) / b.sum()
        np.fill_diagonal(f, 0.0)
        return bool(np.all(f < 1))

    def to_dict(self) -> dict[str, object]:
        return {
            "n": self.n,
            "psi": self.psi,
            "iterations": self.iterations,
            "initial_mse": self.initial_mse,
            "final_mse": self.final_mse,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "stop_reason": self.stop_reason.value,
            "classification": self.classification.value,
            "delta": self.delta,
            "omega_nonnegative": self.omega_nonnegative,
            "mse_trace": list(self.mse_trace),
        }


@dataclass
class ExperimentReport:
    name: str = ""
    inputs: dict[str, object] = field(default_factory=dict)
    trace: list[float] = field(default_factory=list)
    summary: dict[str, object] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "trace": self.trace,
            "summary": self.summary,
            "artifacts": self.artifacts,
        }

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.to_dict(), indent=2, ensure_ascii=False, default=to_jsonable)
        path.write_text(text)


def to_jsonable(value: object) -> object:
    """``json.dumps`` fallback for numpy values, enums and paths."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
