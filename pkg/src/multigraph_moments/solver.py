"""Coordinate-wise solution of h(beta) = d.

h_i(beta) = sum_{j != i} f_ij / (1 - f_ij) with f_ij = beta_i beta_j / sum(beta).
Each sweep solves h_i = d_i for one coordinate at a time, in ascending index
order, with every other coordinate held at its latest value.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from multigraph_moments.config import ROOT_METHODS, MomentsConfig
from multigraph_moments.domain import (
    BetaEstimate,
    BracketError,
    Classification,
    DegreeSequenceError,
    DivergentKernelError,
    NumericalError,
    StopReason,
)
from multigraph_moments.graph import DegreeSequence
from multigraph_moments.log import Logger

# keeps the upper bracket end strictly inside the region where every f < 1
_UPPER_SHRINK = 1 - 1e-12
_MAX_DOUBLINGS = 2000
_MAX_INNER_ITERATIONS = 200
# relative slack on the entrywise bound beta <= d
_BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_sweeps: int = 10_000
    inner_tol: float = 1e-14
    delta: float = 1e-9
    root_method: str = "newton-bisect"
    beta0: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.inner_tol <= 0:
            raise ValueError(f"inner_tol must be positive, got {self.inner_tol}")
        if self.root_method not in ROOT_METHODS:
            raise ValueError(f"root_method must be one of {ROOT_METHODS}, got {self.root_method!r}")

    @classmethod
    def from_config(cls, cfg: MomentsConfig) -> SolverConfig:
        return cls(
            tol=cfg.tol,
            max_sweeps=cfg.max_sweeps,
            inner_tol=cfg.inner_tol,
            delta=cfg.delta,
            root_method=cfg.root_method,
        )


def f(beta: np.ndarray, i: int, j: int) -> float:
    if i == j:
        raise ValueError("f is defined off the diagonal only")
    return float(beta[i] * beta[j] / beta.sum())


def kernel(beta: np.ndarray) -> np.ndarray:
    """The matrix of f_ij(beta) with a zero diagonal."""
    beta = np.asarray(beta, dtype=float)
    out = np.outer(beta, beta) / beta.sum()
    np.fill_diagonal(out, 0.0)
    return out


def check_kernel(fk: np.ndarray) -> None:
    """Raise DivergentKernelError on the first pair with f_ij >= 1."""
    bad = fk >= 1
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        raise DivergentKernelError((i, j), float(fk[i, j]))


def odds(beta: np.ndarray) -> np.ndarray:
    """f / (1 - f) entrywise, zero diagonal."""
    fk = kernel(beta)
    check_kernel(fk)
    return fk / (1 - fk)


def h(beta: np.ndarray) -> np.ndarray:
    return odds(beta).sum(axis=1)


def _bracket(others: np.ndarray, index: int, beta: np.ndarray, d_i: float) -> float:
    s = float(others.sum())
    top = float(others.max())
    if top > 1:
        return s / (top - 1) * _UPPER_SHRINK

    # every f_ij stays below 1 for all b; h_i(b) tends to sum beta_j / (1 - beta_j)
    if top < 1 and float((others / (1 - others)).sum()) <= d_i:
        raise BracketError(index, beta, d_i, "h_i stays below d_i for every b > 0 (no root)")
    hi = max(1.0, d_i)
    for _ in range(_MAX_DOUBLINGS):
        if float((hi * others / (s + hi * (1 - others))).sum()) >= d_i:
            return hi
        hi *= 2
    raise BracketError(index, beta, d_i, "upper bracket not found by doubling")


def coordinate_update(
    beta: np.ndarray,
    i: int,
    d_i: float,
    *,
    inner_tol: float = 1e-14,
    method: str = "newton-bisect",
) -> float:
    """Root b of h_i(beta_1, ..., b, ..., beta_n) = d_i.

    sum(beta) moves with b, so f_ij(b) = b beta_j / (S + b) where S sums the
    other coordinates. The root is unique on (0, S / (max beta_j - 1)).
    """
    if d_i < 0:
        raise ValueError(f"d_i must be nonnegative, got {d_i}")
    if d_i == 0:
        return 0.0
    beta = np.asarray(beta, dtype=float)
    others = np.delete(beta, i)
    if others.size == 0 or others.sum() <= 0:
        raise BracketError(i, beta, d_i, "no other coordinates carry weight")
    s = float(others.sum())
    one_minus = 1 - others

    def g(b: float) -> float:
        return float((b * others / (s + b * one_minus)).sum()) - d_i

    def dg(b: float) -> float:
        return float((s * others / (s + b * one_minus) ** 2).sum())

    hi = _bracket(others, i, beta, d_i)
    if g(hi) < 0:
        raise BracketError(i, beta, d_i, f"h_i({hi:.6g}) < d_i at the guarded upper end")
    width = hi * inner_tol

    if method == "brentq":
        sol = optimize.root_scalar(g, bracket=(0.0, hi), method="brentq", xtol=width)
        if not sol.converged:
            raise BracketError(i, beta, d_i, f"brentq failed: {sol.flag}")
        return float(sol.root)

    lo = 0.0
    b = float(beta[i]) if 0 < beta[i] < hi else hi / 2
    for _ in range(_MAX_INNER_ITERATIONS):
        gb = g(b)
        if gb == 0:
            return b
        if gb < 0:
            lo = b
        else:
            hi = b
        if hi - lo <= width:
            break
        step = gb / dg(b)
        candidate = b - step
        if lo < candidate < hi:
            if abs(step) <= width:
                return candidate
            b = candidate
        else:
            b = (lo + hi) / 2
    if hi - lo <= width:
        return (lo + hi) / 2
    raise BracketError(
        i, beta, d_i, f"no convergence after {_MAX_INNER_ITERATIONS} inner iterations"
    )


def _mse(residual: np.ndarray) -> float:
    return float(residual @ residual) / residual.size


def _as_degrees(d: DegreeSequence | Sequence[int] | np.ndarray) -> DegreeSequence:
    return d if isinstance(d, DegreeSequence) else DegreeSequence(np.asarray(d))


def solve(
    d: DegreeSequence | Sequence[int] | np.ndarray,
    cfg: SolverConfig | None = None,
    *,
    logger: Logger | None = None,
) -> BetaEstimate:
    """Gauss-Seidel sweeps of ``coordinate_update`` until n^-1 ||h - d||^2 <= tol.

    Not converging is a result, not an error: the estimate comes back with
    ``converged=False`` and a ``stop_reason``.
    """
    cfg = cfg or SolverConfig()
    degrees = _as_degrees(d)
    degrees.require_positive()
    if degrees.n < 2:
        raise ValueError("solve needs at least two nodes")
    if not degrees.is_realizable():
        raise DegreeSequenceError(
            f"no loopless multigraph has these degrees (max {int(degrees.d.max())}, "
            f"sum {int(degrees.d.sum())})"
        )
    target = degrees.d.astype(float)
    n = degrees.n

    if cfg.beta0 is not None:
        beta = np.array(cfg.beta0, dtype=float)
        if beta.shape != (n,) or np.any(beta <= 0):
            raise ValueError(f"beta0 must be a positive vector of length {n}")
    else:
        beta = np.ones(n)

    residual = h(beta) - target
    initial = _mse(residual)
    trace: list[float] = []
    stop = StopReason.MAX_SWEEPS
    mse = initial

    if logger:
        logger.info("Solving for beta", n=n, tol=cfg.tol, initial_mse=initial)

    for _sweep in range(cfg.max_sweeps):
        try:
            for i in range(n):
                beta[i] = coordinate_update(
                    beta, i, target[i], inner_tol=cfg.inner_tol, method=cfg.root_method
                )
            residual = h(beta) - target
        except BracketError as exc:
            stop = StopReason.NO_ROOT
            if logger:
                logger.warn("Coordinate update has no root", index=exc.index, sweep=len(trace) + 1)
            residual = _safe_residual(beta, target)
            mse = _mse(residual)
            break
        except NumericalError as exc:
            stop = StopReason.DIVERGED
            if logger:
                logger.warn("Kernel diverged", error=str(exc), sweep=len(trace) + 1)
            residual = _safe_residual(beta, target)
            mse = _mse(residual)
            break
        mse = _mse(residual)
        trace.append(mse)
        if logger:
            logger.debug("sweep", sweep=len(trace), mse=mse)
        if mse <= cfg.tol:
            if _within_bounds(beta, target):
                stop = StopReason.TOLERANCE
            else:
                stop = StopReason.DIVERGED
                if logger:
                    logger.warn(
                        "Residual small but beta exceeds d",
                        index=int(np.argmax(beta - target)),
                        beta_max=float(beta.max()),
                    )
            break

    converged = stop is StopReason.TOLERANCE
    if logger:
        logger.info(
            "Solve finished",
            converged=converged,
            stop_reason=stop.value,
            sweeps=len(trace),
            final_mse=mse,
        )
    return BetaEstimate(
        beta=beta,
        degrees=target,
        iterations=len(trace),
        final_mse=mse,
        converged=converged,
        classification=classify(beta, cfg.delta),
        delta=cfg.delta,
        stop_reason=stop,
        mse_trace=tuple(trace),
        residual=residual,
        initial_mse=initial,
    )


def _within_bounds(beta: np.ndarray, target: np.ndarray) -> bool:
    """beta is finite and beta <= d entrywise, up to a relative slack."""
    return bool(np.all(np.isfinite(beta)) and np.all(beta <= target * (1 + _BOUND_SLACK)))


def _safe_residual(beta: np.ndarray, target: np.ndarray) -> np.ndarray:
    try:
        return h(beta) - target
    except NumericalError:
        return np.full_like(target, np.inf)


def jacobian(beta: np.ndarray) -> np.ndarray:
    """dh/dbeta as (S + D)(B^-1 - E / (4 psi)) with s_ij = f_ij / (1 - f_ij)^2."""
    beta = np.asarray(beta, dtype=float)
    fk = kernel(beta)
    check_kernel(fk)
    s = fk / (1 - fk) ** 2
    sd = s + np.diag(s.sum(axis=1))
    inner = np.diag(1 / beta) - 1 / (2 * beta.sum())
    return sd @ inner


def eigenvalue_lower_bound(n: int) -> float:
    """Lower bound on the smallest Jacobian eigenvalue for physical, well-behaved beta."""
    return (1 - 2 / math.sqrt(5)) / (n * (n - 1))


def classify(beta: np.ndarray, delta: float = 1e-9) -> Classification:
    beta = np.asarray(beta, dtype=float)
    n = beta.size
    if not (np.all(beta >= 1) and np.all(beta <= n - 1)):
        return Classification.NEITHER
    if float(beta.max()) ** 2 <= float(beta.sum()) - delta:
        return Classification.WELL_BEHAVED
    return Classification.PHYSICAL
