"""Closed-form estimators of E[W] and related moments, and how to compare them."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from multigraph_moments.domain import (
    BetaEstimate,
    DegreeSequenceError,
    EstimateSource,
    MomentEstimates,
)
from multigraph_moments.graph import DegreeSequence
from multigraph_moments.solver import check_kernel, kernel


def _beta_vector(beta: BetaEstimate | np.ndarray) -> np.ndarray:
    return np.asarray(beta.beta if isinstance(beta, BetaEstimate) else beta, dtype=float)


def cl_estimate(d: DegreeSequence | Sequence[int] | np.ndarray) -> MomentEstimates:
    """Chung-Lu: omega_ij = d_i d_j / 2m off the diagonal."""
    deg = (d.d if isinstance(d, DegreeSequence) else np.asarray(d)).astype(float)
    total = deg.sum()
    if total <= 0:
        raise DegreeSequenceError("Chung-Lu estimate needs at least one edge")
    omega = np.outer(deg, deg) / total
    np.fill_diagonal(omega, 0.0)
    return MomentEstimates(omega=omega, source=EstimateSource.CL)


def chi_estimate(beta: BetaEstimate | np.ndarray) -> np.ndarray:
    """Probability that at least one edge joins i and j, estimated by f_ij(beta)."""
    fk = kernel(_beta_vector(beta))
    check_kernel(fk)
    return fk


def chi_error_bound(
    beta: BetaEstimate | np.ndarray,
    chi: np.ndarray | None = None,
    *,
    u_star: float = 1.0,
    v_star: float = 1.0,
) -> np.ndarray:
    """Entrywise bound on |chi_ij - f_ij(beta)|.

    Depends on the regularity constants ``u_star`` and ``v_star``, which are
    conjectured, not proven, to be at most 1.
    """
    b = _beta_vector(beta)
    if chi is None:
        chi = chi_estimate(b)
    pair_sum = b[:, None] + b[None, :]
    smaller = np.minimum(b[:, None], b[None, :])
    first = 2 * chi * (pair_sum + 3 * u_star + 2 * v_star + 2)
    eps = (first + (2 * u_star + 1) * smaller) / b.sum()
    np.fill_diagonal(eps, 0.0)
    return eps


def uniform_estimate(beta: BetaEstimate | np.ndarray) -> MomentEstimates:
    """omega_ij = f/(1-f), the odds of at least one edge, with sigma = sqrt(omega (omega + 1))."""
    b = _beta_vector(beta)
    chi = chi_estimate(b)
    omega = chi / (1 - chi)
    return MomentEstimates(
        omega=omega,
        source=EstimateSource.UNIFORM_SOLVER,
        chi=chi,
        sigma=np.sqrt(omega * (omega + 1)),
        eps=chi_error_bound(b, chi),
        beta=b,
        psi=float(b.sum()) / 2,
    )


@dataclass(frozen=True)
class RelativeError:
    """E_ij = (estimate_ij - reference_ij) / reference_ij; NaN where the reference is zero."""

    errors: np.ndarray
    mean_abs: float
    pairs: int
    excluded_pairs: int

    @property
    def mean_abs_all_pairs(self) -> float:
        """Same sum divided by n(n-1)/2, so excluded pairs count as zero error."""
        return self.mean_abs * self.pairs / (self.pairs + self.excluded_pairs)

    def to_dict(self) -> dict[str, object]:
        return {
            "mean_abs_rel_error": self.mean_abs,
            "mean_abs_rel_error_all_pairs": self.mean_abs_all_pairs,
            "pairs": self.pairs,
            "excluded_pairs": self.excluded_pairs,
        }


def relative_error(estimate: np.ndarray, reference: np.ndarray) -> RelativeError:
    """Entrywise relative error and its mean absolute value over unordered pairs.

    ``mean_abs`` averages over the unordered pairs with a nonzero reference, since
    the relative error is undefined elsewhere. Those pairs are counted in
    ``excluded_pairs``; ``mean_abs_all_pairs`` divides the same sum by n(n-1)/2.
    """
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if estimate.shape != reference.shape or estimate.ndim != 2:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {reference.shape}")

    n = reference.shape[0]
    iu = np.triu_indices(n, 1)
    ref_upper = reference[iu]
    usable = ref_upper != 0
    if not usable.any():
        raise ValueError("reference has no nonzero off-diagonal entries")

    errors = np.full_like(reference, np.nan)
    off = ~np.eye(n, dtype=bool) & (reference != 0)
    errors[off] = (estimate[off] - reference[off]) / reference[off]
    np.fill_diagonal(errors, 0.0)

    upper = errors[iu][usable]
    return RelativeError(
        errors=errors,
        mean_abs=float(np.abs(upper).mean()),
        pairs=int(usable.sum()),
        excluded_pairs=int((~usable).sum()),
    )
