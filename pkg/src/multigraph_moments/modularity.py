"""Modularity under a chosen null expectation, and multiway spectral partitioning.

MSP variant used here:

1. Take the top ``k - 1`` eigenpairs of M (dense ``eigh`` up to 2000 nodes,
   Lanczos ``eigsh`` beyond) and keep those with positive eigenvalue.
2. Embed node i as r_i = (sqrt(lambda_r) v_ri) over the kept eigenpairs.
3. From a random labelling, visit nodes in index order: take r_i out of its
   group and put it in the group g maximising R_g . r_i, where R_g sums the
   vectors in g (ties go to the lowest g). Stop after a pass with no moves
   or 100 passes.
4. Score each restart with the exact Q on M and keep the best; the all-one
   partition is kept if nothing beats it.
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from multigraph_moments.domain import EstimateSource, MomentEstimates, NullSource
from multigraph_moments.graph import Multigraph
from multigraph_moments.log import Logger

DENSE_EIGEN_LIMIT = 2000
MAX_PASSES = 100
_POSITIVE = 1e-10

_SOURCE_TO_NULL = {
    EstimateSource.CL: NullSource.CL,
    EstimateSource.UNIFORM_SOLVER: NullSource.UNIFORM_I,
    EstimateSource.MCMC: NullSource.MCMC,
    EstimateSource.ORACLE: NullSource.CUSTOM,
}


@dataclass(frozen=True)
class ModularityMatrix:
    """M = w - E[W] together with the edge count that normalises Q."""

    matrix: np.ndarray
    null_source: NullSource
    m: int

    def __post_init__(self) -> None:
        if not np.allclose(self.matrix, self.matrix.T):
            raise ValueError("modularity matrix must be symmetric")
        if self.m < 1:
            raise ValueError("modularity needs at least one edge")

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray
    k: int
    q: float
    null_source: NullSource

    @property
    def k_used(self) -> int:
        return int(np.unique(self.labels).size)

    def to_dict(self) -> dict[str, object]:
        return {
            "Q": self.q,
            "k_requested": self.k,
            "k_used": self.k_used,
            "null_source": self.null_source.value,
        }


def modularity_matrix(
    g: Multigraph, null: MomentEstimates, null_source: NullSource | None = None
) -> ModularityMatrix:
    if null.omega.shape != g.w.shape:
        raise ValueError(f"null shape {null.omega.shape} does not match graph shape {g.w.shape}")
    return ModularityMatrix(
        matrix=g.w - null.omega,
        null_source=null_source or _SOURCE_TO_NULL[null.source],
        m=g.m,
    )


def _validate_labels(labels: Sequence[int] | np.ndarray, n: int) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("labels must be integers")
    if np.any(arr < 0):
        raise ValueError("labels must be nonnegative")
    return arr.astype(np.int64)


def modularity_score(mm: ModularityMatrix, labels: Sequence[int] | np.ndarray) -> float:
    """Q = (1/2m) sum over ordered pairs i, j in the same group of M_ij."""
    arr = _validate_labels(labels, mm.n)
    groups, inverse = np.unique(arr, return_inverse=True)
    onehot = np.eye(groups.size)[inverse.reshape(-1)]
    return float(np.einsum("ik,ij,jk->", onehot, mm.matrix, onehot)) / (2 * mm.m)


def modularity(g: Multigraph, null: MomentEstimates, labels: Sequence[int] | np.ndarray) -> float:
    return modularity_score(modularity_matrix(g, null), labels)


def cross_evaluate(partition: Partition, other: ModularityMatrix) -> float:
    """Q of ``partition`` scored against a different null."""
    return modularity_score(other, partition.labels)


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber groups 0, 1, ... in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty_like(first)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse].astype(np.int64)


def spectral_embedding(mm: ModularityMatrix, k: int) -> np.ndarray:
    """Rows are the node vectors; columns are the positive top-(k-1) eigendirections."""
    n = mm.n
    r = max(1, min(k - 1, n - 1))
    if n <= DENSE_EIGEN_LIMIT:
        values, vectors = linalg.eigh(mm.matrix, subset_by_index=[n - r, n - 1])
    else:
        values, vectors = sparse_linalg.eigsh(mm.matrix, k=r, which="LA")
    keep = values > _POSITIVE * max(1.0, float(np.abs(values).max()))
    return np.asarray(vectors[:, keep] * np.sqrt(values[keep]))


def vector_partition(
    embedding: np.ndarray, k: int, initial: np.ndarray, max_passes: int = MAX_PASSES
) -> np.ndarray:
    labels = initial.astype(np.int64).copy()
    sums = np.zeros((k, embedding.shape[1]))
    np.add.at(sums, labels, embedding)
    for _ in range(max_passes):
        moved = False
        for i in range(labels.size):
            r_i = embedding[i]
            sums[labels[i]] -= r_i
            best = int(np.argmax(sums @ r_i))
            if best != labels[i]:
                moved = True
                labels[i] = best
            sums[best] += r_i
        if not moved:
            break
    return labels


def msp(
    mm: ModularityMatrix,
    k: int,
    restarts: int = 50,
    seed: int = 20200229,
    *,
    threads: int = 1,
    logger: Logger | None = None,
) -> Partition:
    """Best of ``restarts`` vector partitionings of the spectral embedding.

    Restart ``r`` draws its initial labels from ``SeedSequence(seed).spawn(restarts)[r]``;
    the best Q wins, ties going to the lowest restart index.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > mm.n:
        raise ValueError(f"k={k} exceeds the number of nodes ({mm.n})")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")

    single = np.zeros(mm.n, dtype=np.int64)
    single_q = modularity_score(mm, single)
    embedding = spectral_embedding(mm, k)
    if embedding.shape[1] == 0:
        if logger:
            logger.warn("Modularity matrix has no positive eigenvalues; returning one group")
        return Partition(single, k, single_q, mm.null_source)

    seeds = np.random.SeedSequence(seed).spawn(restarts)

    def one(seq: np.random.SeedSequence) -> tuple[float, np.ndarray]:
        initial = np.random.default_rng(seq).integers(0, k, size=mm.n)
        labels = canonical_labels(vector_partition(embedding, k, initial))
        return modularity_score(mm, labels), labels

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    best_index = 0
    for idx, (q, _) in enumerate(results):
        if q > results[best_index][0]:
            best_index = idx
    best_q, best_labels = results[best_index]

    if best_q < single_q:
        best_q, best_labels = single_q, single
    if logger:
        logger.info(
            "MSP finished",
            k=k,
            restarts=restarts,
            best_restart=best_index,
            q=best_q,
            k_used=int(np.unique(best_labels).size),
        )
    return Partition(best_labels, k, best_q, mm.null_source)
