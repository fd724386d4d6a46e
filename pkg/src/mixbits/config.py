"""Run configuration: YAML schema, validation, defaults, and emission.

The schema is versioned and strict: unknown keys are rejected so a typo
never silently falls back to a default. load_config(emit_config(cfg))
round-trips to an equal config.
"""

import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .cost import CostParams
from .env import RewardParams
from .agent.ppo import PPOConfig
from .errors import ConfigError
from .nn.network import KINDS
from .nn.train import TrainConfig

SCHEMA_VERSION = 1

DEFAULT_BITWIDTHS = (2, 3, 4, 5, 6, 7, 8)


@dataclass
class NetworkConfig:
    input: tuple[int, ...]
    layers: list[dict]


@dataclass
class DatasetConfig:
    kind: str  # images | blobs | moons | idx
    n_train: int = 4000
    n_val: int = 1000
    classes: int = 10
    noise: float = 0.3
    side: int = 12
    separation: float = 5.0
    train_images: str | None = None
    train_labels: str | None = None
    val_images: str | None = None
    val_labels: str | None = None


@dataclass
class EnvConfig:
    action_mode: str = "flexible"
    reward_mode: str = "auto"
    deferred_depth_threshold: int = 6
    train_subsample: int = 1000
    eval_subsample: int = 1000
    short_epochs: int = 1


@dataclass
class EnumerateConfig:
    cap: int = 10_000
    jobs: int = 1


@dataclass
class ValidateConfig:
    eps_quant: float = 0.05
    eps_acc: float = 0.005


@dataclass
class RunConfig:
    network: NetworkConfig
    dataset: DatasetConfig
    name: str = "run"
    seed: int = 0
    out_dir: str = "runs/out"
    bitwidths: tuple[int, ...] = DEFAULT_BITWIDTHS
    cost: CostParams = field(default_factory=CostParams)
    reward: RewardParams = field(default_factory=RewardParams)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    baseline_train: TrainConfig = field(default_factory=lambda: TrainConfig(0.1, 15, 64))
    short_train: TrainConfig = field(default_factory=lambda: TrainConfig(0.05, 1, 100))
    long_train: TrainConfig = field(default_factory=lambda: TrainConfig(0.05, 15, 64))
    env: EnvConfig = field(default_factory=EnvConfig)
    enumerate: EnumerateConfig = field(default_factory=EnumerateConfig)
    validate: ValidateConfig = field(default_factory=ValidateConfig)


_SECTION_TYPES = {
    "cost": (CostParams, "energy_ratio max_bits baseline_bits"),
    "reward": (RewardParams, "a b th formulation"),
    "ppo": (
        PPOConfig,
        "adam_step_size gae_parameter discount_gamma update_epochs clip_epsilon "
        "entropy_coeff episodes batch_episodes",
    ),
    "baseline_train": (TrainConfig, "learning_rate epochs batch_size lambda_q lambda_wd sinreq_bits"),
    "short_train": (TrainConfig, "learning_rate epochs batch_size lambda_q lambda_wd sinreq_bits"),
    "long_train": (TrainConfig, "learning_rate epochs batch_size lambda_q lambda_wd sinreq_bits"),
    "env": (
        EnvConfig,
        "action_mode reward_mode deferred_depth_threshold train_subsample eval_subsample short_epochs",
    ),
    "enumerate": (EnumerateConfig, "cap jobs"),
    "validate": (ValidateConfig, "eps_quant eps_acc"),
}

_TOP_KEYS = {"schema_version", "name", "seed", "out_dir", "network", "dataset", "bitwidths"} | set(
    _SECTION_TYPES
)


def _reject_unknown(section: str, data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def _parse_section(name: str, data: dict | None, defaults: dict | None = None):
    cls, keys = _SECTION_TYPES[name]
    allowed = keys.split()
    data = dict(data or {})
    _reject_unknown(name, data, set(allowed))
    kwargs = dict(defaults or {})
    kwargs.update(data)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _parse_network(data) -> NetworkConfig:
    if not isinstance(data, dict):
        raise ConfigError("network: expected a mapping with 'input' and 'layers'")
    _reject_unknown("network", data, {"input", "layers"})
    if "input" not in data or "layers" not in data:
        raise ConfigError("network: both 'input' and 'layers' are required")
    input_shape = tuple(int(d) for d in data["input"])
    if not input_shape or any(d < 1 for d in input_shape):
        raise ConfigError("network.input: dimensions must be positive")
    layers = data["layers"]
    if not isinstance(layers, list) or not layers:
        raise ConfigError("network.layers: need a nonempty list")
    parsed = []
    for i, layer in enumerate(layers):
        if not isinstance(layer, dict):
            raise ConfigError(f"network.layers[{i}]: expected a mapping")
        kind = layer.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"network.layers[{i}].kind: must be one of {KINDS}, got {kind!r}")
        if kind == "conv2d":
            _reject_unknown(f"network.layers[{i}]", layer, {"kind", "filters", "kernel"})
            if "filters" not in layer or "kernel" not in layer:
                raise ConfigError(f"network.layers[{i}]: conv2d needs 'filters' and 'kernel'")
            parsed.append({"kind": "conv2d", "filters": int(layer["filters"]), "kernel": int(layer["kernel"])})
        else:
            _reject_unknown(f"network.layers[{i}]", layer, {"kind", "units"})
            if "units" not in layer:
                raise ConfigError(f"network.layers[{i}]: dense needs 'units'")
            parsed.append({"kind": "dense", "units": int(layer["units"])})
    return NetworkConfig(input_shape, parsed)


def _parse_dataset(data, base_dir: Path) -> DatasetConfig:
    if not isinstance(data, dict):
        raise ConfigError("dataset: expected a mapping with a 'kind'")
    allowed = {
        "kind", "n_train", "n_val", "classes", "noise", "side", "separation",
        "train_images", "train_labels", "val_images", "val_labels",
    }
    _reject_unknown("dataset", data, allowed)
    kind = data.get("kind")
    if kind not in ("images", "blobs", "moons", "idx"):
        raise ConfigError(f"dataset.kind: must be images|blobs|moons|idx, got {kind!r}")
    cfg = DatasetConfig(kind=kind, **{k: v for k, v in data.items() if k != "kind"})
    if cfg.n_train < 2 or cfg.n_val < 1:
        raise ConfigError("dataset: n_train must be >= 2 and n_val >= 1")
    if kind == "idx":
        for key in ("train_images", "train_labels", "val_images", "val_labels"):
            value = getattr(cfg, key)
            if value is None:
                raise ConfigError(f"dataset.{key}: required for kind 'idx'")
            resolved = (base_dir / value).resolve() if not Path(value).is_absolute() else Path(value)
            if not resolved.exists():
                raise ConfigError(f"dataset.{key}: path {resolved} does not exist")
            setattr(cfg, key, str(resolved))
    return cfg


def parse_config(data: dict, base_dir: Path = Path(".")) -> RunConfig:
    """Validate a raw mapping into a RunConfig with defaults applied."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _reject_unknown("config", data, _TOP_KEYS)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")
    if "network" not in data or "dataset" not in data:
        raise ConfigError("config needs 'network' and 'dataset' sections")

    bitwidths = tuple(int(b) for b in data.get("bitwidths", DEFAULT_BITWIDTHS))
    if len(set(bitwidths)) != len(bitwidths) or not bitwidths:
        raise ConfigError("bitwidths: need a nonempty set of distinct values")
    if min(bitwidths) < 2:
        raise ConfigError("bitwidths: entries must be >= 2 (one sign bit plus magnitude bits)")

    cost_defaults = {"max_bits": max(bitwidths)}
    cfg = RunConfig(
        network=_parse_network(data["network"]),
        dataset=_parse_dataset(data["dataset"], base_dir),
        name=str(data.get("name", "run")),
        seed=int(data.get("seed", 0)),
        out_dir=str(data.get("out_dir", "runs/out")),
        bitwidths=tuple(sorted(bitwidths)),
        cost=_parse_section("cost", data.get("cost"), cost_defaults),
        reward=_parse_section("reward", data.get("reward")),
        ppo=_parse_section("ppo", data.get("ppo")),
        baseline_train=_parse_section(
            "baseline_train", data.get("baseline_train"),
            {"learning_rate": 0.1, "epochs": 15, "batch_size": 64},
        ),
        short_train=_parse_section(
            "short_train", data.get("short_train"),
            {"learning_rate": 0.05, "epochs": 1, "batch_size": 100},
        ),
        long_train=_parse_section(
            "long_train", data.get("long_train"),
            {"learning_rate": 0.05, "epochs": 15, "batch_size": 64},
        ),
        env=_parse_section("env", data.get("env")),
        enumerate=_parse_section("enumerate", data.get("enumerate")),
        validate=_parse_section("validate", data.get("validate")),
    )
    if max(bitwidths) > cfg.cost.max_bits:
        raise ConfigError(
            f"bitwidths: maximum entry {max(bitwidths)} exceeds cost.max_bits {cfg.cost.max_bits}"
        )
    if cfg.env.action_mode not in ("flexible", "restricted"):
        raise ConfigError(f"env.action_mode: must be flexible|restricted, got {cfg.env.action_mode!r}")
    if cfg.env.reward_mode not in ("auto", "per_step", "deferred"):
        raise ConfigError(f"env.reward_mode: must be auto|per_step|deferred, got {cfg.env.reward_mode!r}")
    return cfg


def load_config(path) -> RunConfig:
    """Parse and validate a YAML run config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: YAML parse error{line}: {exc}") from exc
    if data is None:
        raise ConfigError(f"{path}: empty config")
    return parse_config(data, base_dir=path.parent)


def emit_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig back to canonical YAML."""
    data = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "seed": cfg.seed,
        "out_dir": cfg.out_dir,
        "network": {"input": list(cfg.network.input), "layers": cfg.network.layers},
        "dataset": {k: v for k, v in asdict(cfg.dataset).items() if v is not None},
        "bitwidths": list(cfg.bitwidths),
        "cost": asdict(cfg.cost),
        "reward": asdict(cfg.reward),
        "ppo": {k: v for k, v in asdict(cfg.ppo).items() if k != "seed"},
        "baseline_train": {k: v for k, v in asdict(cfg.baseline_train).items() if k != "seed" and v is not None},
        "short_train": {k: v for k, v in asdict(cfg.short_train).items() if k != "seed" and v is not None},
        "long_train": {k: v for k, v in asdict(cfg.long_train).items() if k != "seed" and v is not None},
        "env": asdict(cfg.env),
        "enumerate": asdict(cfg.enumerate),
        "validate": asdict(cfg.validate),
    }
    return yaml.safe_dump(data, sort_keys=True)


def config_digest(cfg: RunConfig) -> str:
    """Stable content hash of the fully-defaulted configuration."""
    return hashlib.sha256(emit_config(cfg).encode("utf-8")).hexdigest()
