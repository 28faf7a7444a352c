"""Reading and writing degree files, matrices, beta tables, partitions and metadata."""

from __future__ import annotations

import json
import platform
import time
from collections.abc import Hashable, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
import scipy

from multigraph_moments.domain import DataError, DegreeSequenceError, to_jsonable
from multigraph_moments.graph import DegreeSequence, Multigraph


def _require_file(path: Path, what: str) -> None:
    if not path.is_file():
        raise DataError(f"{what} not found: {path}")


def read_degrees(path: Path) -> DegreeSequence:
    """One integer per line, or a CSV with a ``degree`` column (and optional ``node_id``)."""
    _require_file(path, "degree file")
    first = ""
    with path.open() as fh:
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                first = line
                break
    if not first:
        raise DegreeSequenceError(f"degree file is empty: {path}")

    if "degree" in first.lower():
        frame = pd.read_csv(path, comment="#", skipinitialspace=True)
        if "degree" not in frame.columns:
            raise DegreeSequenceError(f"{path}: header has no 'degree' column")
        values = frame["degree"]
        ids = tuple(frame["node_id"].tolist()) if "node_id" in frame.columns else None
    else:
        frame = pd.read_csv(path, header=None, comment="#", sep=r"[,\s]+", engine="python")
        values = frame.iloc[:, 0]
        ids = None

    numeric = pd.to_numeric(values, errors="coerce")
    if numeric.isna().any():
        bad = int(np.flatnonzero(numeric.isna().to_numpy())[0])
        raise DegreeSequenceError(
            f"{path}: entry {bad + 1} is not an integer ({values.iloc[bad]!r})"
        )
    return DegreeSequence(numeric.to_numpy(), ids)


def write_degrees(path: Path, d: DegreeSequence) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"node_id": list(d.labels), "degree": d.d}).to_csv(path, index=False)


def write_edge_list(path: Path, g: Multigraph) -> None:
    """One "u v" line per parallel edge, readable by ``graph.read_edge_list``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = g.labels
    with path.open("w") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        for i, j in g.edge_list():
            fh.write(f"{labels[i]} {labels[j]}\n")


def write_matrix_csv(path: Path, matrix: np.ndarray, ids: Sequence[Hashable]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = [str(v) for v in ids]
    frame = pd.DataFrame(matrix, index=labels, columns=labels)
    frame.to_csv(path, index_label="node_id", float_format="%.17g")


def read_matrix_csv(path: Path) -> tuple[np.ndarray, list[str]]:
    _require_file(path, "matrix file")
    frame = pd.read_csv(path, index_col=0, dtype={0: str})
    if frame.shape[0] != frame.shape[1]:
        raise DataError(f"{path}: matrix is {frame.shape[0]}x{frame.shape[1]}, not square")
    return frame.to_numpy(dtype=float), [str(c) for c in frame.columns]


def write_matrix_json(path: Path, matrix: np.ndarray, ids: Sequence[Hashable]) -> None:
    """Sparse form: nonzero upper-triangle entries as [i, j, value] with i < j."""
    path.parent.mkdir(parents=True, exist_ok=True)
    iu, ju = np.nonzero(np.triu(matrix, 1))
    payload = {
        "n": int(matrix.shape[0]),
        "ids": [str(v) for v in ids],
        "entries": [[int(i), int(j), float(matrix[i, j])] for i, j in zip(iu, ju, strict=True)],
    }
    path.write_text(json.dumps(payload))


def write_beta_csv(
    path: Path, ids: Sequence[Hashable], degrees: np.ndarray, beta: np.ndarray
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"node_id": [str(v) for v in ids], "d_i": degrees, "beta_i": beta})
    frame.to_csv(path, index=False, float_format="%.17g")


def read_beta_csv(path: Path) -> pd.DataFrame:
    _require_file(path, "beta file")
    return pd.read_csv(path, dtype={"node_id": str})


def write_partition_csv(path: Path, ids: Sequence[Hashable], labels: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"node_id": [str(v) for v in ids], "label": labels}).to_csv(path, index=False)


def read_partition_csv(path: Path, ids: Sequence[Hashable]) -> np.ndarray:
    """Labels aligned to ``ids``; every node must appear exactly once."""
    _require_file(path, "partition file")
    frame = pd.read_csv(path, dtype={"node_id": str})
    if not {"node_id", "label"} <= set(frame.columns):
        raise DataError(f"{path}: expected columns node_id,label")
    if frame["node_id"].duplicated().any():
        raise DataError(f"{path}: duplicate node ids")
    lookup = dict(zip(frame["node_id"], frame["label"], strict=True))
    missing = [str(v) for v in ids if str(v) not in lookup]
    if missing:
        raise DataError(f"{path}: no label for node {missing[0]!r}")
    return np.array([int(lookup[str(v)]) for v in ids], dtype=np.int64)


def write_trace_csv(path: Path, trace: Sequence[float], n: int) -> None:
    """Per-sweep n^-1 ||h - d||^2 alongside the unsquared n^-1 ||h - d||."""
    path.parent.mkdir(parents=True, exist_ok=True)
    mse = np.asarray(trace, dtype=float)
    frame = pd.DataFrame(
        {"sweep": np.arange(1, mse.size + 1), "mse": mse, "norm": np.sqrt(mse * n) / n}
    )
    frame.to_csv(path, index=False, float_format="%.17g")


def write_comparison_csv(
    path: Path,
    ids: Sequence[Hashable],
    reference: np.ndarray,
    estimates: dict[str, np.ndarray],
) -> None:
    """One row per unordered pair: reference value, each estimate and its relative error."""
    path.parent.mkdir(parents=True, exist_ok=True)
    n = reference.shape[0]
    iu, ju = np.triu_indices(n, 1)
    labels = [str(v) for v in ids]
    ref = reference[iu, ju]
    columns: dict[str, object] = {
        "node_i": [labels[i] for i in iu],
        "node_j": [labels[j] for j in ju],
        "reference": ref,
    }
    with np.errstate(divide="ignore", invalid="ignore"):
        for name, est in estimates.items():
            values = est[iu, ju]
            columns[name] = values
            columns[f"rel_err_{name}"] = np.where(ref != 0, (values - ref) / ref, np.nan)
    pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")


def run_metadata(**fields: object) -> dict[str, object]:
    from multigraph_moments import __version__

    return {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        **fields,
    }


def write_json(path: Path, payload: dict[str, object]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, default=to_jsonable))
