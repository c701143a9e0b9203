"""Experiment configuration: JSON file + CLI overrides, fully validated.

Unknown keys are rejected by name so typos fail loudly instead of
silently falling back to defaults.
"""

import json
from dataclasses import asdict, dataclass, field, fields

from .active import Strategy
from .errors import ConfigurationError
from .federation import BASELINE_MODES, Schedule

# Reference schedule at desk scale: 125 epochs as 25 rounds of 5,
# communication every round, query every 2nd round until round 20, then a
# 5-round fine-tune tail.
DEFAULT_SCHEDULE = dict(total_rounds=25, local_epochs=5, al_interval=2,
                        al_last_round=20)
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_STRATEGIES = ("random", "ensemble_entropy")
DEFAULT_ABLATION_GAMMAS = (0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class DatasetConfig:
    feature_dim: int = 32
    num_classes: int = 3
    divisor: int = 10
    class_mean_scale: float = 2.5
    client_shift_scale: float = 1.25
    noise_std: float = 1.75
    csv_paths: tuple = ()  # when set, load per-client CSVs instead


@dataclass(frozen=True)
class ModelConfig:
    hidden_dims: tuple = (32,)
    # tiny batches keep the step count high enough for the low default
    # learning rate to converge within the short desk-scale schedule
    batch_size: int = 1


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 2e-4
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    schedule: Schedule = field(default_factory=lambda: Schedule(**DEFAULT_SCHEDULE))
    gamma: float = 0.5
    gammas: tuple = ()  # optional grid; empty means (gamma,)
    ablation_gammas: tuple = DEFAULT_ABLATION_GAMMAS
    init_label_fraction: float = 0.05
    strategies: tuple = DEFAULT_STRATEGIES
    baselines: tuple = BASELINE_MODES
    seeds: tuple = DEFAULT_SEEDS
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    parallel_clients: bool = False
    jobs: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}")
        for g in tuple(self.gammas) + tuple(self.ablation_gammas):
            if not 0.0 < g <= 1.0:
                raise ConfigurationError(f"gammas entries must be in (0, 1], got {g}")
        if not 0.0 < self.init_label_fraction <= 1.0:
            raise ConfigurationError(
                f"init_label_fraction must be in (0, 1], got {self.init_label_fraction}")
        if len(self.seeds) < 1:
            raise ConfigurationError("seeds must contain at least one seed")
        if len(self.strategies) < 1:
            raise ConfigurationError("strategies must not be empty")
        for s in self.strategies:
            Strategy.parse(s)
        for b in self.baselines:
            if b not in BASELINE_MODES:
                raise ConfigurationError(
                    f"unknown baseline {b!r}; choose from {', '.join(BASELINE_MODES)}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")
        if self.model.batch_size < 1:
            raise ConfigurationError(f"model.batch_size must be >= 1, got {self.model.batch_size}")

    @property
    def gamma_grid(self):
        return tuple(self.gammas) if self.gammas else (self.gamma,)

    def to_dict(self):
        """Experiment-defining fields only; execution details (out_dir,
        jobs, parallel_clients) are excluded so result files are invariant
        to where and how a run executed."""
        d = asdict(self)
        d["schedule"] = {f.name: getattr(self.schedule, f.name)
                         for f in fields(Schedule)}
        for runtime_only in ("out_dir", "jobs", "parallel_clients"):
            d.pop(runtime_only)
        return d


def _build_section(cls, raw, path):
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys under {path}: {', '.join(unknown)}")
    coerced = {}
    for f in fields(cls):
        if f.name not in raw:
            continue
        value = raw[f.name]
        if isinstance(value, list):
            value = tuple(value)
        coerced[f.name] = value
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid {path}: {exc}") from None


_SECTIONS = {"dataset": DatasetConfig, "schedule": Schedule, "model": ModelConfig,
             "optimizer": OptimizerConfig}


def config_from_dict(raw) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


def parse_config(path=None, overrides=None) -> ExperimentConfig:
    """Load a JSON config file and apply CLI-style overrides on top.

    Recognized overrides: gamma (float), strategies (list of names),
    seeds (int n -> seeds 0..n-1, or explicit list), out_dir, jobs,
    parallel_clients.
    """
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
    overrides = dict(overrides or {})
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "seeds" and isinstance(value, int):
            value = list(range(value))
        raw[key] = value
    return config_from_dict(raw)
