"""Engine configuration, loadable from a small TOML file."""
from __future__ import annotations

import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError


@dataclass(frozen=True)
class EngineConfig:
    port: int = 8000
    data_dir: str = "fairdesk-data"
    max_constraints: int = 3      # K: constraints per combination
    omega: float = 0.3            # causal edge threshold
    l1: float = 0.05              # structure-learning sparsity
    l2: float = 1e-4              # logistic regularization
    k_max: int = 10               # bin cap for numeric features
    kind_threshold: int = 12      # numeric-vs-categorical distinct cutoff
    test_fraction: float = 0.2
    min_support: int = 0          # subgroup card support filter (0 = off)
    max_upload_bytes: int = 50 * 1024 * 1024
    max_rows: int = 100_000


def load_config(path=None) -> EngineConfig:
    """Read a TOML config; missing file or keys fall back to defaults."""
    if path is None:
        return EngineConfig()
    raw = Path(path).read_bytes()
    data = tomllib.loads(raw.decode("utf-8"))
    known = {f.name for f in fields(EngineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(
            f"unknown config key(s): {', '.join(sorted(unknown))}")
    return EngineConfig(**data)
