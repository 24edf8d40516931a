"""Experiment configuration and its flat YAML file form."""

from dataclasses import asdict, dataclass, fields, replace
import math
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..estimation import check_identifiability

DEFAULT_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DESK_TRIALS = 500
PAPER_TRIALS = 10_000


@dataclass(frozen=True)
class ExperimentConfig:
    """Every scalar of a simulation scenario.

    Field defaults are the published scenario (``trials`` included);
    :meth:`desk` gives the lighter profile the CLI runs by default.
    """

    M: int = 4
    Q: int = 4
    N: int = 16
    T: int = 64
    K: int = 5
    L1: int = 2
    L2: int = 2
    snr_grid_db: tuple = DEFAULT_SNR_GRID
    trials: int = PAPER_TRIALS
    seed: int = 0
    eps: float = 1e-5
    i_max: int = 100
    ar_lambda: float = 0.75
    als_init: str = "svd"
    workers: int = 1
    # convergence-study grids
    path_products: tuple = (2, 4, 8, 16)
    reflector_counts: tuple = (16, 32, 64)
    # complexity report
    complexity_n_grid: tuple = (16, 32, 64, 128, 256)
    als_iter: float = 10.0

    def __post_init__(self):
        for name in ("snr_grid_db", "path_products", "reflector_counts", "complexity_n_grid"):
            value = getattr(self, name)
            if isinstance(value, (int, float)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        self.validate()

    @classmethod
    def desk(cls, **overrides) -> "ExperimentConfig":
        return cls(**{"trials": DESK_TRIALS, **overrides})

    @classmethod
    def paper(cls, **overrides) -> "ExperimentConfig":
        return cls(**{"trials": PAPER_TRIALS, **overrides})

    @property
    def rank(self) -> int:
        return self.L1 * self.L2

    def validate(self) -> None:
        for name in ("M", "Q", "N", "T", "K", "L1", "L2", "trials", "i_max", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 <= self.ar_lambda <= 1.0:
            raise ConfigError(f"ar_lambda must lie in [0, 1], got {self.ar_lambda}")
        if not self.eps >= 0:
            raise ConfigError(f"eps must be nonnegative, got {self.eps}")
        if self.als_init not in ("svd", "random"):
            raise ConfigError(f"als_init must be 'svd' or 'random', got {self.als_init!r}")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db is empty")
        for snr in self.snr_grid_db:
            if not isinstance(snr, (int, float)) or math.isnan(snr) or snr == -math.inf:
                raise ConfigError(f"invalid SNR value {snr!r}")
        for name in ("path_products", "reflector_counts", "complexity_n_grid"):
            for v in getattr(self, name):
                if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    raise ConfigError(f"{name} entries must be positive integers, got {v!r}")

    def identifiability(self):
        return check_identifiability(self.M, self.Q, self.N, self.K, self.T, self.L1, self.L2)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def _coerce(name: str, value):
    """Bring YAML scalars to the field's type (YAML reads ``1e-5`` as a string)."""
    ints = {"M", "Q", "N", "T", "K", "L1", "L2", "trials", "seed", "i_max", "workers"}
    try:
        if name in ints:
            if isinstance(value, float) and value.is_integer():
                return int(value)
            return int(value) if isinstance(value, str) else value
        if name in ("eps", "ar_lambda", "als_iter"):
            return float(value)
        if name == "snr_grid_db":
            items = value if isinstance(value, (list, tuple)) else [value]
            return tuple(float(v) for v in items)
        if name in ("path_products", "reflector_counts", "complexity_n_grid"):
            items = value if isinstance(value, (list, tuple)) else [value]
            return tuple(int(v) for v in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return value


def config_from_mapping(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    unknown = set(data) - FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = base or ExperimentConfig.desk()
    return replace(base, **{k: _coerce(k, v) for k, v in data.items()})


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a flat ``key: value`` YAML document into a config."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError("config file must be a flat key/value mapping")
    return config_from_mapping(data, base)


__all__ = [
    "DEFAULT_SNR_GRID",
    "DESK_TRIALS",
    "PAPER_TRIALS",
    "ExperimentConfig",
    "config_from_mapping",
    "load_config",
]
