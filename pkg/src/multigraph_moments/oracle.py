"""Exact moments on tiny degree sequences by exhaustive enumeration."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from multigraph_moments.domain import (
    ChainTarget,
    DataError,
    EnsembleTooLargeError,
    EstimateSource,
    MomentEstimates,
)
from multigraph_moments.graph import DegreeSequence, Multigraph

DEFAULT_MAX_EDGES = 8


@dataclass(frozen=True)
class EnumeratedEnsemble:
    """Every loopless multigraph with degree sequence ``d``.

    ``config_weights[k]`` is the number of stub matchings that produce ``graphs[k]``.
    """

    d: DegreeSequence
    graphs: tuple[Multigraph, ...]
    config_weights: np.ndarray

    def __len__(self) -> int:
        return len(self.graphs)

    def probabilities(self, model: ChainTarget) -> np.ndarray:
        if model is ChainTarget.UNIFORM:
            p = np.ones(len(self.graphs))
        else:
            p = self.config_weights.astype(float)
        return p / p.sum()

    def index(self) -> dict[bytes, int]:
        return {g.key(): k for k, g in enumerate(self.graphs)}


def _as_degrees(d: DegreeSequence | Sequence[int] | np.ndarray) -> DegreeSequence:
    return d if isinstance(d, DegreeSequence) else DegreeSequence(np.asarray(d))


def _multigraphs(d: np.ndarray) -> Iterator[np.ndarray]:
    """Yield each adjacency matrix with row sums ``d`` exactly once."""
    n = d.size
    rest = d.astype(np.int64).copy()
    w = np.zeros((n, n), dtype=np.int64)

    def fill_row(i: int, j: int) -> Iterator[np.ndarray]:
        if rest[i] == 0:
            yield from next_row(i + 1)
            return
        if j >= n or rest[i] > rest[j:].sum():
            return
        for k in range(min(rest[i], rest[j]), -1, -1):
            w[i, j] = w[j, i] = k
            rest[i] -= k
            rest[j] -= k
            yield from fill_row(i, j + 1)
            rest[i] += k
            rest[j] += k
        w[i, j] = w[j, i] = 0

    def next_row(i: int) -> Iterator[np.ndarray]:
        if i >= n:
            yield w.copy()
            return
        yield from fill_row(i, i + 1)

    yield from next_row(0)


def _stub_matchings(d: np.ndarray) -> Counter[bytes]:
    """Tally loopless perfect matchings of labelled stubs by the graph they produce."""
    n = d.size
    owners = [i for i in range(n) for _ in range(int(d[i]))]
    w = np.zeros((n, n), dtype=np.int64)
    iu = np.triu_indices(n, 1)
    tally: Counter[bytes] = Counter()

    def match(stubs: list[int]) -> None:
        if not stubs:
            tally[w[iu].tobytes()] += 1
            return
        a = stubs[0]
        for k in range(1, len(stubs)):
            b = stubs[k]
            if a == b:
                continue
            w[a, b] += 1
            w[b, a] += 1
            match(stubs[1:k] + stubs[k + 1 :])
            w[a, b] -= 1
            w[b, a] -= 1

    match(owners)
    return tally


def enumerate_ensemble(
    d: DegreeSequence | Sequence[int] | np.ndarray, max_edges: int = DEFAULT_MAX_EDGES
) -> EnumeratedEnsemble:
    degrees = _as_degrees(d)
    if degrees.m > max_edges:
        raise EnsembleTooLargeError(
            f"m={degrees.m} exceeds the enumeration cap of {max_edges} edges; "
            "raise max_edges explicitly"
        )
    graphs = tuple(Multigraph(w, degrees.ids) for w in _multigraphs(degrees.d))
    tally = _stub_matchings(degrees.d)
    weights = np.array([tally[g.key()] for g in graphs], dtype=np.int64)
    return EnumeratedEnsemble(degrees, graphs, weights)


def oracle_moments(ensemble: EnumeratedEnsemble, model: ChainTarget) -> MomentEstimates:
    """Exact first and second moments of W under the uniform or configuration measure."""
    if not ensemble.graphs:
        degrees = ensemble.d.d.tolist()
        raise DataError(f"empty ensemble: no loopless multigraph has degrees {degrees}")
    p = ensemble.probabilities(model)
    stack = np.stack([g.w for g in ensemble.graphs]).astype(float)
    present = (stack >= 1).astype(float)

    omega = np.einsum("g,gij->ij", p, stack)
    second = np.einsum("g,gij->ij", p, stack**2)
    chi = np.einsum("g,gij->ij", p, present)
    inner = np.einsum("g,gik,gjk->ij", p, stack, stack)
    b = present.sum(axis=2)
    beta = p @ b
    psi = float(p @ b.sum(axis=1)) / 2

    return MomentEstimates(
        omega=omega,
        source=EstimateSource.ORACLE,
        chi=chi,
        sigma=np.sqrt(np.clip(second - omega**2, 0, None)),
        beta=beta,
        psi=psi,
        second_moment=second,
        inner=inner,
    )
