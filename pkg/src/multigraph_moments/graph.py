"""Multigraph and degree-sequence types, edge-list ingestion and collapsing."""

from __future__ import annotations

import math
import re
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np

from multigraph_moments.domain import (
    DataError,
    DegreeSequenceError,
    EdgeListParseError,
    EmptyGraphError,
    SelfLoopError,
)
from multigraph_moments.log import Logger

LAYOUTS = ("uvt", "tuv")

_SPLIT = re.compile(r"[,\s]+")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    """Nonnegative integer degrees with an even sum."""

    d: np.ndarray
    ids: tuple[Hashable, ...] | None = None

    def __post_init__(self) -> None:
        raw = np.asarray(self.d)
        if raw.ndim != 1:
            raise DegreeSequenceError(f"degrees must be one-dimensional, got shape {raw.shape}")
        if raw.size and not np.all(np.equal(np.mod(raw, 1), 0)):
            raise DegreeSequenceError("degrees must be integers")
        d = raw.astype(np.int64)
        if np.any(d < 0):
            raise DegreeSequenceError("degrees must be nonnegative")
        if int(d.sum()) % 2:
            raise DegreeSequenceError(f"odd degree sum ({int(d.sum())})")
        if self.ids is not None and len(self.ids) != d.size:
            raise DegreeSequenceError(f"{len(self.ids)} ids for {d.size} degrees")
        object.__setattr__(self, "d", _frozen(d))

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def m(self) -> int:
        return int(self.d.sum()) // 2

    @property
    def labels(self) -> tuple[Hashable, ...]:
        return self.ids if self.ids is not None else tuple(range(self.n))

    def require_positive(self) -> None:
        zeros = np.flatnonzero(self.d == 0)
        if zeros.size:
            raise DegreeSequenceError(
                f"{zeros.size} degree-zero node(s) (first at index {int(zeros[0])}); "
                "remove degree-zero nodes first"
            )

    def is_realizable(self) -> bool:
        """A loopless multigraph exists iff the largest degree is at most half the sum."""
        return self.n == 0 or 2 * int(self.d.max()) <= int(self.d.sum())

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"DegreeSequence(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class CollapsedStats:
    """The simple graph behind a multigraph: x_ij = 1 when w_ij >= 1."""

    x: np.ndarray
    b: np.ndarray
    y: int


@dataclass(frozen=True, eq=False)
class Multigraph:
    """Loopless undirected multigraph held as a symmetric integer matrix.

    ``w`` is read-only. ``ids`` maps dense indices back to the original node ids.
    """

    w: np.ndarray
    ids: tuple[Hashable, ...] | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.w)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DataError(f"adjacency must be square, got shape {w.shape}")
        if w.size and not np.all(np.equal(np.mod(w, 1), 0)):
            raise DataError("edge multiplicities must be integers")
        w = w.astype(np.int64)
        if np.any(w < 0):
            raise DataError("edge multiplicities must be nonnegative")
        if not np.array_equal(w, w.T):
            raise DataError("adjacency must be symmetric")
        if np.any(np.diag(w)):
            i = int(np.flatnonzero(np.diag(w))[0])
            raise SelfLoopError(f"self-loop at node index {i}")
        if self.ids is not None and len(self.ids) != w.shape[0]:
            raise DataError(f"{len(self.ids)} ids for {w.shape[0]} nodes")
        object.__setattr__(self, "w", _frozen(w))

    @classmethod
    def from_edges(
        cls, n: int, pairs: Iterable[tuple[int, int]], ids: Sequence[Hashable] | None = None
    ) -> Multigraph:
        w = np.zeros((n, n), dtype=np.int64)
        for i, j in pairs:
            if i == j:
                raise SelfLoopError(f"self-loop at node index {i}")
            w[i, j] += 1
            w[j, i] += 1
        return cls(w, tuple(ids) if ids is not None else None)

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> Multigraph:
        nodes = list(g.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        pairs = []
        for u, v in g.edges():
            if u == v:
                raise SelfLoopError(f"self-loop on node {u!r}")
            pairs.append((index[u], index[v]))
        return cls.from_edges(len(nodes), pairs, nodes)

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        labels = self.labels
        g.add_nodes_from(labels)
        for i, j in self.edge_list():
            g.add_edge(labels[i], labels[j])
        return g

    @property
    def n(self) -> int:
        return int(self.w.shape[0])

    @property
    def m(self) -> int:
        return int(np.triu(self.w, 1).sum())

    @property
    def labels(self) -> tuple[Hashable, ...]:
        return self.ids if self.ids is not None else tuple(range(self.n))

    @property
    def degrees(self) -> DegreeSequence:
        return DegreeSequence(self.w.sum(axis=1), self.ids)

    @property
    def is_simple(self) -> bool:
        return bool(np.all(self.w <= 1))

    def edge_list(self) -> list[tuple[int, int]]:
        """One (i, j) entry with i < j per parallel edge, in row-major order."""
        iu, ju = np.nonzero(np.triu(self.w, 1))
        out: list[tuple[int, int]] = []
        for i, j in zip(iu.tolist(), ju.tolist(), strict=True):
            out.extend([(i, j)] * int(self.w[i, j]))
        return out

    def key(self) -> bytes:
        """Hashable fingerprint of the adjacency, used to count visits per state."""
        return self.w[np.triu_indices(self.n, 1)].tobytes()

    def __repr__(self) -> str:
        return f"Multigraph(n={self.n}, m={self.m})"


def degree_sequence(g: Multigraph) -> DegreeSequence:
    return g.degrees


def collapse(g: Multigraph) -> CollapsedStats:
    x = (g.w >= 1).astype(np.int64)
    b = x.sum(axis=1)
    return CollapsedStats(x=x, b=b, y=int(b.sum()) // 2)


def realize(d: DegreeSequence) -> Multigraph:
    """Build one loopless multigraph with degree sequence ``d``.

    The node with the most remaining stubs is joined to the partner it shares
    the fewest edges with, among partners that leave the remainder realizable.
    Parallel edges appear only where that condition forces them.
    """
    if not d.is_realizable():
        raise DegreeSequenceError(
            f"no loopless multigraph has max degree {int(d.d.max())} "
            f"with degree sum {int(d.d.sum())}"
        )
    rest = d.d.astype(np.int64).copy()
    w = np.zeros((d.n, d.n), dtype=np.int64)
    total = int(rest.sum())
    while total > 0:
        i = int(np.argmax(rest))
        rest[i] -= 1
        total -= 2
        j = _spread_partner(rest, w[i], i, total)
        w[i, j] += 1
        w[j, i] += 1
        rest[j] -= 1
    return Multigraph(w, d.ids)


def _spread_partner(rest: np.ndarray, row: np.ndarray, i: int, total: int) -> int:
    # largest remaining degree once candidate j gives up a stub
    top2 = np.sort(rest)[-2:]
    top, second = int(top2[-1]), int(top2[0])
    unique_top = int((rest == top).sum()) == 1
    after = np.where((rest == top) & unique_top, max(top - 1, second), top)
    ok = (rest > 0) & (2 * after <= total)
    ok[i] = False
    cand = np.flatnonzero(ok)
    # fewest shared edges first, then most remaining stubs
    best = np.lexsort((-rest[cand], row[cand]))[0]
    return int(cand[best])


# --- edge-list ingestion ---


@dataclass(frozen=True)
class EdgeRecord:
    u: Hashable
    v: Hashable
    t: int | None = None
    line: int = 0


def parse_edge_lines(lines: Iterable[str], layout: str = "uvt") -> list[EdgeRecord]:
    """Parse "u v [t]" (or "t u v") records; '#' lines and blank lines are skipped."""
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    records: list[EdgeRecord] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = [tok for tok in _SPLIT.split(line) if tok]
        if layout == "tuv":
            if len(tokens) != 3:
                raise EdgeListParseError(f"expected 't u v', got {len(tokens)} field(s)", lineno)
            t_tok, u, v = tokens
        else:
            if len(tokens) not in (2, 3):
                raise EdgeListParseError(f"expected 'u v [t]', got {len(tokens)} field(s)", lineno)
            u, v = tokens[0], tokens[1]
            t_tok = tokens[2] if len(tokens) == 3 else None
        t: int | None = None
        if t_tok is not None:
            try:
                t = int(t_tok)
            except ValueError:
                raise EdgeListParseError(f"timestamp {t_tok!r} is not an integer", lineno) from None
        records.append(EdgeRecord(u, v, t, lineno))
    return records


def read_edge_list(path: Path, layout: str = "uvt") -> list[EdgeRecord]:
    if not path.is_file():
        raise DataError(f"edge list not found: {path}")
    with path.open() as fh:
        return parse_edge_lines(fh, layout)


def _as_record(r: EdgeRecord | Sequence[Hashable], pos: int) -> EdgeRecord:
    if isinstance(r, EdgeRecord):
        return r
    if len(r) == 2:
        return EdgeRecord(r[0], r[1], None, pos)
    if len(r) == 3:
        t = r[2]
        if t is not None and not isinstance(t, int | np.integer):
            raise EdgeListParseError(f"timestamp {t!r} is not an integer", pos)
        return EdgeRecord(r[0], r[1], None if t is None else int(t), pos)
    raise EdgeListParseError(f"record has {len(r)} field(s)", pos)


def from_edge_list(
    records: Iterable[EdgeRecord | Sequence[Hashable]],
    *,
    skip_self_loops: bool = False,
    logger: Logger | None = None,
) -> Multigraph:
    """Accumulate edge records into a multigraph with densely re-indexed nodes.

    Node ids are indexed in order of first appearance; ``Multigraph.ids`` keeps
    the mapping for output.
    """
    index: dict[Hashable, int] = {}
    pairs: list[tuple[int, int]] = []
    skipped = 0
    seen = 0
    for pos, raw in enumerate(records, start=1):
        seen += 1
        rec = _as_record(raw, pos)
        if rec.u == rec.v:
            if skip_self_loops:
                skipped += 1
                continue
            raise SelfLoopError(f"line {rec.line or pos}: self-loop on node {rec.u!r}")
        i = index.setdefault(rec.u, len(index))
        j = index.setdefault(rec.v, len(index))
        pairs.append((i, j))

    if seen == 0:
        raise EmptyGraphError("empty edge list")
    if not pairs:
        raise EmptyGraphError(f"no edges left after skipping {skipped} self-loop record(s)")
    if logger and skipped:
        logger.warn("Skipped self-loop records", skipped=skipped)

    g = Multigraph.from_edges(len(index), pairs, list(index))
    if logger:
        logger.info("Built multigraph", n=g.n, m=g.m, skipped_self_loops=skipped)
    return g


def temporal_threshold(records: Sequence[EdgeRecord], fraction: float) -> list[EdgeRecord]:
    """Keep the most recent ``ceil(fraction * len(records))`` interactions.

    Every record sharing the cut timestamp is kept, so the result can be
    slightly larger than the requested count.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if not records:
        return []
    missing = [r for r in records if r.t is None]
    if missing:
        raise DataError(f"line {missing[0].line}: record has no timestamp")
    ordered = sorted(records, key=lambda r: r.t)  # type: ignore[arg-type, return-value]
    keep = math.ceil(round(fraction * len(ordered), 9))
    cut = ordered[len(ordered) - keep].t
    return [r for r in ordered if r.t >= cut]  # type: ignore[operator]
