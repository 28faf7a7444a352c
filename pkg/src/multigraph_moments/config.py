from __future__ import annotations

import os
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path

from multigraph_moments.domain import ChainTarget

# Environment variable → dataclass field
_ENV_MAP: dict[str, str] = {
    "MGM_SEED": "seed",
    "MGM_TOL": "tol",
    "MGM_MAX_SWEEPS": "max_sweeps",
    "MGM_DT": "dt",
    "MGM_SAMPLES": "samples",
    "MGM_BURN_IN": "burn_in",
    "MGM_BATCHES": "batches",
    "MGM_MODEL": "model",
    "MGM_NULL": "null",
    "MGM_K": "k",
    "MGM_RESTARTS": "restarts",
    "MGM_THREADS": "threads",
    "MGM_OUT": "out",
    "MGM_FRACTION": "fraction",
    "MGM_ROOT_METHOD": "root_method",
}

_INT_FIELDS = {
    "seed", "max_sweeps", "dt", "samples", "burn_in", "batches", "k", "restarts", "threads",
    "max_edges",
}
_FLOAT_FIELDS = {"tol", "inner_tol", "delta", "fraction"}
_PATH_FIELDS = {"out"}

ROOT_METHODS = ("newton-bisect", "brentq")


def _coerce(key: str, value: object) -> object:
    """Coerce a raw config value to the correct Python type."""
    if value is None:
        return None
    if key in _INT_FIELDS:
        return int(value)  # type: ignore[call-overload]
    if key in _FLOAT_FIELDS:
        return float(value)  # type: ignore[arg-type]
    if key in _PATH_FIELDS:
        return Path(str(value))
    return value


def _normalize_toml(raw: dict[str, object]) -> dict[str, object]:
    """Convert TOML kebab-case keys to snake_case dataclass fields."""
    result: dict[str, object] = {}
    for k, v in raw.items():
        name = k.replace("-", "_")
        result[name] = _coerce(name, v)
    return result


def _read_toml(path: Path) -> dict[str, object]:
    if not path.is_file():
        return {}
    try:
        return tomllib.loads(path.read_text())
    except (tomllib.TOMLDecodeError, OSError):
        return {}


@dataclass
class MomentsConfig:
    """Settings shared by the solver, the chain and the partitioner.

    ``dt`` and ``burn_in`` left as None are derived from the edge count when a
    chain is configured.
    """

    seed: int = 20200229
    tol: float = 1e-12
    max_sweeps: int = 10_000
    inner_tol: float = 1e-14
    delta: float = 1e-9
    root_method: str = "newton-bisect"
    dt: int | None = None
    samples: int = 1000
    burn_in: int | None = None
    batches: int = 50
    model: str = "uniform"
    null: str = "uniform-I"
    k: int = 2
    restarts: int = 50
    threads: int = 1
    out: Path = field(default_factory=lambda: Path("out"))
    fraction: float = 1.0
    max_edges: int = 8

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.root_method not in ROOT_METHODS:
            raise ValueError(f"root_method must be one of {ROOT_METHODS}, got {self.root_method!r}")
        ChainTarget(self.model)
        if not 0 < self.fraction <= 1:
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")

    @staticmethod
    def from_pyproject(root: Path | None = None) -> dict[str, object]:
        """Read [tool.multigraph-moments] from pyproject.toml."""
        r = root or Path.cwd()
        data = _read_toml(r / "pyproject.toml")
        section = data.get("tool", {})
        if isinstance(section, dict):
            raw = section.get("multigraph-moments", {})
            if isinstance(raw, dict):
                return _normalize_toml(raw)
        return {}

    @staticmethod
    def from_file(root: Path | None = None) -> dict[str, object]:
        """Read the standalone .multigraph-moments.toml."""
        r = root or Path.cwd()
        return _normalize_toml(_read_toml(r / ".multigraph-moments.toml"))

    @staticmethod
    def from_env() -> dict[str, object]:
        result: dict[str, object] = {}
        for env_key, name in _ENV_MAP.items():
            val = os.environ.get(env_key)
            if val is not None:
                result[name] = _coerce(name, val)
        return result

    @classmethod
    def resolve(
        cls, explicit: dict[str, object] | None = None, project_root: Path | None = None
    ) -> MomentsConfig:
        """Merge all config sources.

        Priority: explicit > pyproject.toml > .toml file > env > defaults.
        """
        root = project_root or Path.cwd()

        merged: dict[str, object] = {}
        layers = (cls.from_env(), cls.from_file(root), cls.from_pyproject(root), explicit or {})
        for layer in layers:
            for k, v in layer.items():
                if v is not None:
                    merged[k] = v

        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in merged.items() if k in known})  # type: ignore[arg-type]
