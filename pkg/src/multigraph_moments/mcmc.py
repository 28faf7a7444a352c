"""Degree-preserving edge-swap chain and Monte Carlo moment estimates.

The chain keeps one slot per parallel edge. Each step draws two distinct
slots uniformly. If their four endpoints are not distinct the step is a no-op;
otherwise the endpoints are swapped one of two ways with equal probability and
the move is accepted with probability 1 (configuration target) or
1 / (w_ij * w_kl) (uniform target). Every proposal advances the clock.
"""

from __future__ import annotations

import functools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from multigraph_moments.config import MomentsConfig
from multigraph_moments.domain import (
    ChainError,
    ChainTarget,
    EstimateSource,
    MomentEstimates,
)
from multigraph_moments.graph import DegreeSequence, Multigraph
from multigraph_moments.log import Logger
from multigraph_moments.oracle import EnumeratedEnsemble

_BLOCK = 4096
# proposal cap per requested burn-in swap
_BURN_IN_PROPOSALS_PER_SWAP = 1000


@dataclass(frozen=True)
class ChainConfig:
    target: ChainTarget = ChainTarget.UNIFORM
    dt: int = 10
    samples: int = 1000
    burn_in: int = 0
    burn_in_swaps: int = 0
    seed: int = 20200229
    batches: int = 50
    track_inner_products: bool = False
    track_states: bool = False

    def __post_init__(self) -> None:
        if self.dt < 1:
            raise ValueError(f"dt must be >= 1, got {self.dt}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.burn_in_swaps < 0:
            raise ValueError(f"burn_in_swaps must be >= 0, got {self.burn_in_swaps}")
        if self.batches < 1:
            raise ValueError(f"batches must be >= 1, got {self.batches}")

    @classmethod
    def from_config(cls, cfg: MomentsConfig, m: int, **overrides: object) -> ChainConfig:
        """Derive chain settings.

        Unset dt becomes max(10, m). An explicit burn-in counts proposals; left
        unset, the chain burns in until 10*m swaps have been accepted.
        """
        values: dict[str, object] = {
            "target": ChainTarget(cfg.model),
            "dt": cfg.dt if cfg.dt is not None else max(10, m),
            "samples": cfg.samples,
            "burn_in": cfg.burn_in if cfg.burn_in is not None else 0,
            "burn_in_swaps": 10 * m if cfg.burn_in is None else 0,
            "seed": cfg.seed,
            "batches": cfg.batches,
        }
        values.update(overrides)
        return cls(**values)  # type: ignore[arg-type]

    def to_dict(self) -> dict[str, object]:
        return {
            "target": self.target.value,
            "dt": self.dt,
            "samples": self.samples,
            "burn_in": self.burn_in,
            "burn_in_swaps": self.burn_in_swaps,
            "seed": self.seed,
            "batches": self.batches,
        }


@dataclass
class MomentAccumulator:
    """Running sums over sampled states, plus per-batch sums for standard errors."""

    n: int
    batch_size: int = 1
    track_inner_products: bool = False
    track_states: bool = False
    count: int = 0
    sum_w: np.ndarray = field(init=False)
    sum_w2: np.ndarray = field(init=False)
    sum_x: np.ndarray = field(init=False)
    sum_b: np.ndarray = field(init=False)
    sum_y: float = 0.0
    sum_inner: np.ndarray | None = field(init=False)
    batch_w: list[np.ndarray] = field(default_factory=list)
    batch_x: list[np.ndarray] = field(default_factory=list)
    visits: Counter[bytes] = field(default_factory=Counter)
    steps: int = 0
    valid_proposals: int = 0
    accepted: int = 0
    _open_w: np.ndarray = field(init=False, repr=False)
    _open_x: np.ndarray = field(init=False, repr=False)
    _open_count: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        shape = (self.n, self.n)
        self.sum_w = np.zeros(shape)
        self.sum_w2 = np.zeros(shape)
        self.sum_x = np.zeros(shape)
        self.sum_b = np.zeros(self.n)
        self.sum_inner = np.zeros(shape) if self.track_inner_products else None
        self._open_w = np.zeros(shape)
        self._open_x = np.zeros(shape)

    def add(self, w: np.ndarray) -> None:
        x = (w >= 1).astype(float)
        b = x.sum(axis=1)
        self.count += 1
        self.sum_w += w
        self.sum_w2 += w * w
        self.sum_x += x
        self.sum_b += b
        self.sum_y += float(b.sum()) / 2
        if self.sum_inner is not None:
            self.sum_inner += w @ w
        if self.track_states:
            self.visits[w[np.triu_indices(self.n, 1)].astype(np.int64).tobytes()] += 1

        self._open_w += w
        self._open_x += x
        self._open_count += 1
        if self._open_count == self.batch_size:
            self.batch_w.append(self._open_w / self.batch_size)
            self.batch_x.append(self._open_x / self.batch_size)
            self._open_w = np.zeros_like(self._open_w)
            self._open_x = np.zeros_like(self._open_x)
            self._open_count = 0

    def merge(self, other: MomentAccumulator) -> MomentAccumulator:
        """Combine two independent runs. Samples in unfinished batches count toward means only."""
        if other.n != self.n:
            raise ValueError(f"cannot merge accumulators of size {self.n} and {other.n}")
        if other.batch_size != self.batch_size:
            raise ValueError("cannot merge accumulators with different batch sizes")
        out = MomentAccumulator(
            self.n,
            self.batch_size,
            self.track_inner_products and other.track_inner_products,
            self.track_states and other.track_states,
        )
        out.count = self.count + other.count
        out.sum_w = self.sum_w + other.sum_w
        out.sum_w2 = self.sum_w2 + other.sum_w2
        out.sum_x = self.sum_x + other.sum_x
        out.sum_b = self.sum_b + other.sum_b
        out.sum_y = self.sum_y + other.sum_y
        if out.track_inner_products:
            out.sum_inner = self.sum_inner + other.sum_inner  # type: ignore[operator]
        out.batch_w = self.batch_w + other.batch_w
        out.batch_x = self.batch_x + other.batch_x
        if out.track_states:
            out.visits = self.visits + other.visits
        out.steps = self.steps + other.steps
        out.valid_proposals = self.valid_proposals + other.valid_proposals
        out.accepted = self.accepted + other.accepted
        return out

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0

    def acceptance(self) -> dict[str, object]:
        return {
            "steps": self.steps,
            "valid_proposals": self.valid_proposals,
            "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate,
            "acceptance_rate_valid": (
                self.accepted / self.valid_proposals if self.valid_proposals else 0.0
            ),
        }


class EdgeSwapChain:
    """A single edge-swap chain over multigraphs with a fixed degree sequence."""

    def __init__(
        self,
        g0: Multigraph,
        target: ChainTarget,
        rng: np.random.Generator,
        *,
        check_invariants: bool = False,
    ) -> None:
        edges = g0.edge_list()
        if len(edges) < 2:
            raise ChainError(f"chain has no moves: m={len(edges)} < 2")
        self._target = target
        self._rng = rng
        self._check = check_invariants
        self._ids = g0.ids
        self._w = g0.w.copy()
        self._degrees = g0.w.sum(axis=1)
        self._ea = [i for i, _ in edges]
        self._eb = [j for _, j in edges]
        self._m = len(edges)
        self._buffer: tuple[list[int], list[int], list[float], list[float]] = ([], [], [], [])
        self._pos = _BLOCK
        self.steps = 0
        self.valid_proposals = 0
        self.accepted = 0

    @property
    def m(self) -> int:
        return self._m

    @property
    def w(self) -> np.ndarray:
        view = self._w.view()
        view.setflags(write=False)
        return view

    @property
    def state(self) -> Multigraph:
        return Multigraph(self._w, self._ids)

    def _refill(self) -> None:
        rng = self._rng
        a = rng.integers(0, self._m, size=_BLOCK)
        b = rng.integers(0, self._m - 1, size=_BLOCK)
        b += b >= a
        u = rng.random(_BLOCK).tolist()
        coin = rng.random(_BLOCK).tolist()
        self._buffer = (a.tolist(), b.tolist(), u, coin)
        self._pos = 0

    def step(self) -> bool:
        """Advance one proposal. Returns True when a swap was applied."""
        if self._pos >= _BLOCK:
            self._refill()
        a_slots, b_slots, accept_u, coin_u = self._buffer
        p = self._pos
        self._pos += 1
        self.steps += 1

        a, b = a_slots[p], b_slots[p]
        i, j = self._ea[a], self._eb[a]
        u, v = self._ea[b], self._eb[b]
        if i == u or i == v or j == u or j == v:
            return False
        self.valid_proposals += 1

        w = self._w
        if self._target is ChainTarget.UNIFORM and accept_u[p] * w[i, j] * w[u, v] >= 1.0:
            return False

        if coin_u[p] < 0.5:
            (p1, q1), (p2, q2) = (i, u), (j, v)
        else:
            (p1, q1), (p2, q2) = (i, v), (j, u)
        w[i, j] -= 1
        w[j, i] -= 1
        w[u, v] -= 1
        w[v, u] -= 1
        w[p1, q1] += 1
        w[q1, p1] += 1
        w[p2, q2] += 1
        w[q2, p2] += 1
        self._ea[a], self._eb[a] = p1, q1
        self._ea[b], self._eb[b] = p2, q2
        self.accepted += 1

        if self._check:
            self._assert_invariants()
        return True

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()

    def _assert_invariants(self) -> None:
        w = self._w
        if not np.array_equal(w.sum(axis=1), self._degrees):
            raise ChainError(f"degree sequence changed at step {self.steps}")
        if not np.array_equal(w, w.T) or np.any(np.diag(w)) or np.any(w < 0):
            raise ChainError(f"adjacency invariant broken at step {self.steps}")


def propose_and_step(
    state: Multigraph, target: ChainTarget, rng: np.random.Generator
) -> tuple[Multigraph, bool]:
    """One chain step from ``state``, returned as a new multigraph."""
    chain = EdgeSwapChain(state, target, rng)
    accepted = chain.step()
    return chain.state, accepted


def burn_in_until_accepted(
    chain: EdgeSwapChain, swaps: int, *, logger: Logger | None = None
) -> int:
    """Step until ``swaps`` more swaps are accepted; returns the proposals used.

    Stops early after ``1000 * swaps`` proposals, with a warning, for states
    where almost every proposal is rejected.
    """
    start_steps, target = chain.steps, chain.accepted + swaps
    cap = start_steps + swaps * _BURN_IN_PROPOSALS_PER_SWAP
    while chain.accepted < target and chain.steps < cap:
        chain.step()
    used = chain.steps - start_steps
    if logger:
        if chain.accepted < target:
            logger.warn(
                "Burn-in proposal cap reached",
                proposals=used,
                accepted=swaps - (target - chain.accepted),
                requested=swaps,
            )
        else:
            logger.info("Burn-in finished", proposals=used, accepted=swaps)
    return used


def run_chain(
    g0: Multigraph,
    cfg: ChainConfig,
    *,
    seed: int | np.random.SeedSequence | None = None,
    logger: Logger | None = None,
) -> MomentAccumulator:
    """Burn in, then record ``cfg.samples`` states spaced ``cfg.dt`` proposals apart.

    Burn-in runs ``cfg.burn_in`` proposals, then continues until ``cfg.burn_in_swaps``
    swaps have been accepted.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    chain = EdgeSwapChain(
        g0, cfg.target, rng, check_invariants=bool(logger and logger.debug_enabled)
    )
    acc = MomentAccumulator(
        g0.n,
        batch_size=max(1, cfg.samples // cfg.batches),
        track_inner_products=cfg.track_inner_products,
        track_states=cfg.track_states,
    )

    chain.run(cfg.burn_in)
    if cfg.burn_in_swaps:
        burn_in_until_accepted(chain, cfg.burn_in_swaps, logger=logger)
    for _ in range(cfg.samples):
        chain.run(cfg.dt)
        acc.add(chain.w)

    acc.steps = chain.steps
    acc.valid_proposals = chain.valid_proposals
    acc.accepted = chain.accepted
    if logger:
        logger.info("Chain finished", samples=acc.count, **acc.acceptance())
    return acc


def _run_one(g0: Multigraph, cfg: ChainConfig, seed: np.random.SeedSequence) -> MomentAccumulator:
    return run_chain(g0, cfg, seed=seed)


def run_chains(
    g0: Multigraph,
    cfg: ChainConfig,
    chains: int,
    threads: int = 1,
    *,
    logger: Logger | None = None,
) -> MomentAccumulator:
    """Run independent chains on seeds spawned from ``cfg.seed`` and merge them.

    Chain ``c`` always uses ``SeedSequence(cfg.seed).spawn(chains)[c]``, and results
    are merged in chain order, so the output does not depend on ``threads``.
    """
    if chains < 1:
        raise ValueError(f"chains must be >= 1, got {chains}")
    seeds = np.random.SeedSequence(cfg.seed).spawn(chains)
    if threads <= 1 or chains == 1:
        results = [run_chain(g0, cfg, seed=s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=min(threads, chains)) as pool:
            results = list(pool.map(functools.partial(_run_one, g0, cfg), seeds))
    merged = functools.reduce(MomentAccumulator.merge, results)
    if logger:
        logger.info("Chains merged", chains=chains, samples=merged.count, **merged.acceptance())
    return merged


def _batch_se(batches: list[np.ndarray]) -> np.ndarray | None:
    if len(batches) < 2:
        return None
    means = np.stack(batches)
    return np.asarray(means.std(axis=0, ddof=1) / np.sqrt(len(batches)))


def mc_estimates(acc: MomentAccumulator) -> MomentEstimates:
    """Sample means of W, its square, the collapsed graph and, if tracked, row inner products."""
    if acc.count == 0:
        raise ChainError("no samples accumulated")
    c = acc.count
    omega = acc.sum_w / c
    second = acc.sum_w2 / c
    return MomentEstimates(
        omega=omega,
        source=EstimateSource.MCMC,
        chi=acc.sum_x / c,
        sigma=np.sqrt(np.clip(second - omega**2, 0, None)),
        beta=acc.sum_b / c,
        psi=acc.sum_y / c,
        second_moment=second,
        inner=None if acc.sum_inner is None else acc.sum_inner / c,
        omega_se=_batch_se(acc.batch_w),
        chi_se=_batch_se(acc.batch_x),
    )


@dataclass(frozen=True)
class IdentityResidual:
    """Residual of the configuration-model stationarity identity; NaN where undefined."""

    values: np.ndarray
    undefined: np.ndarray

    @property
    def max_abs(self) -> float:
        defined = self.values[~self.undefined]
        return float(np.abs(defined).max()) if defined.size else 0.0


def configuration_identity_residual(
    source: MomentAccumulator | MomentEstimates, d: DegreeSequence | np.ndarray
) -> IdentityResidual:
    """omega_ij - (d_i d_j - E[w_i^T w_j] - E[w_ij^2]) / (2m - d_i - d_j)."""
    est = mc_estimates(source) if isinstance(source, MomentAccumulator) else source
    if est.inner is None or est.second_moment is None:
        raise ValueError("identity residual needs row inner products (track_inner_products)")
    deg = (d.d if isinstance(d, DegreeSequence) else np.asarray(d)).astype(float)
    if deg.size != est.n:
        raise ValueError(f"degree sequence has {deg.size} entries for {est.n} nodes")

    denom = deg.sum() - deg[:, None] - deg[None, :]
    undefined = denom == 0
    np.fill_diagonal(undefined, False)
    numer = np.outer(deg, deg) - est.inner - est.second_moment
    with np.errstate(divide="ignore", invalid="ignore"):
        values = est.omega - numer / denom
    values[undefined] = np.nan
    np.fill_diagonal(values, 0.0)
    return IdentityResidual(values, undefined)


@dataclass(frozen=True)
class VisitTest:
    statistic: float
    pvalue: float
    observed: np.ndarray
    expected: np.ndarray


def chain_visit_test(
    acc: MomentAccumulator, ensemble: EnumeratedEnsemble, model: ChainTarget
) -> VisitTest:
    """Chi-square goodness of fit of sampled state frequencies against the exact measure."""
    if not acc.track_states:
        raise ValueError("visit test needs a chain run with track_states")
    index = ensemble.index()
    observed = np.zeros(len(ensemble))
    for key, hits in acc.visits.items():
        if key not in index:
            raise ChainError("chain visited a state outside the enumerated ensemble")
        observed[index[key]] = hits
    expected = ensemble.probabilities(model) * acc.count
    if len(ensemble) < 2:
        return VisitTest(0.0, 1.0, observed, expected)
    result = stats.chisquare(observed, expected)
    return VisitTest(float(result.statistic), float(result.pvalue), observed, expected)
