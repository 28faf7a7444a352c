"""Shared pytest fixtures."""

from pathlib import Path

import numpy as np
import pytest

from multigraph_moments.graph import DegreeSequence, Multigraph


def _from_pairs(n: int, pairs: list[tuple[int, int]]) -> Multigraph:
    return Multigraph.from_edges(n, pairs)


@pytest.fixture
def triangle() -> Multigraph:
    return _from_pairs(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def two_triangles() -> Multigraph:
    """Two disjoint triangles {0, 1, 2} and {3, 4, 5}."""
    return _from_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


@pytest.fixture
def four_cycle() -> Multigraph:
    """A state in the d = (2, 2, 2, 2) ensemble."""
    return _from_pairs(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


@pytest.fixture
def double_pairs() -> Multigraph:
    """Two double edges: w_01 = w_23 = 2."""
    return _from_pairs(4, [(0, 1), (0, 1), (2, 3), (2, 3)])


@pytest.fixture
def star5() -> DegreeSequence:
    return DegreeSequence(np.array([5, 1, 1, 1, 1, 1]))


@pytest.fixture
def two_stars5() -> DegreeSequence:
    return DegreeSequence(np.array([5, 1, 1, 1, 1, 1, 5, 1, 1, 1, 1, 1]))


@pytest.fixture
def edge_file(tmp_path: Path) -> Path:
    """Two triangles with timestamps, written as 'u v t'."""
    path = tmp_path / "edges.txt"
    path.write_text(
        "# contacts\n"
        "a b 10\n"
        "b c 20\n"
        "a c 30\n"
        "d e 40\n"
        "e f 50\n"
        "d f 60\n"
    )
    return path


@pytest.fixture
def clean_env(monkeypatch: pytest.MonkeyPatch):
    """Remove config and logging env vars to ensure clean state."""
    for var in (
        "MGM_SEED", "MGM_TOL", "MGM_MAX_SWEEPS", "MGM_DT", "MGM_SAMPLES", "MGM_BURN_IN",
        "MGM_BATCHES", "MGM_MODEL", "MGM_NULL", "MGM_K", "MGM_RESTARTS", "MGM_THREADS",
        "MGM_OUT", "MGM_FRACTION", "MGM_ROOT_METHOD", "DEBUG", "LOG_FORMAT",
    ):
        monkeypatch.delenv(var, raising=False)
