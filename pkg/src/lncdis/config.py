"""Pipeline configuration files and per-stage seed derivation.

Config files hold ``key = value`` lines with dotted keys such as
``gbdt.num_trees = 10``; ``#`` starts a comment. Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .cnn import NetworkSpec, TrainConfig
from .gbdt import GbdtConfig
from .similarity import GipConfig

STAGES = ("negatives", "cnn-init", "cnn-batches", "test-negatives", "folds", "gbdt", "label-shuffle")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CnnOptions:
    conv_filters: int = 8
    conv_kernel: tuple[int, int] = (2, 16)
    pool_window: tuple[int, int] = (1, 2)
    pool_mode: str = "max"
    hidden_units: int = 64


@dataclass(frozen=True)
class PipelineConfig:
    delta: float = 0.5
    gamma_prime_l: float = 1.0
    gamma_prime_d: float = 1.0
    cnn: CnnOptions = field(default_factory=CnnOptions)
    train: TrainConfig = field(default_factory=TrainConfig)
    gbdt: GbdtConfig = field(default_factory=GbdtConfig)
    folds: int = 5
    threshold: float = 0.5
    master_seed: int = 0
    leaky_similarities: bool = False
    shuffle_labels: bool = False

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("cv.folds must be at least 2")
        if not 0 < self.delta <= 1:
            raise ConfigError("similarity.delta must lie in (0, 1]")
        GipConfig(self.gamma_prime_l)
        GipConfig(self.gamma_prime_d)

    def network_spec(self, width: int) -> NetworkSpec:
        return NetworkSpec((2, width), **dataclasses.asdict(self.cnn))

    def gip_l(self) -> GipConfig:
        return GipConfig(self.gamma_prime_l)

    def gip_d(self) -> GipConfig:
        return GipConfig(self.gamma_prime_d)


# dotted key -> (section attribute or None, field name)
KEYS: dict[str, tuple[str | None, str]] = {
    "similarity.delta": (None, "delta"),
    "similarity.gamma_prime_l": (None, "gamma_prime_l"),
    "similarity.gamma_prime_d": (None, "gamma_prime_d"),
    "cnn.conv_filters": ("cnn", "conv_filters"),
    "cnn.conv_kernel": ("cnn", "conv_kernel"),
    "cnn.pool_window": ("cnn", "pool_window"),
    "cnn.pool_mode": ("cnn", "pool_mode"),
    "cnn.hidden_units": ("cnn", "hidden_units"),
    "cnn.learning_rate": ("train", "learning_rate"),
    "cnn.l2_strength": ("train", "l2_strength"),
    "cnn.epochs": ("train", "epochs"),
    "cnn.batch_size": ("train", "batch_size"),
    "gbdt.num_trees": ("gbdt", "num_trees"),
    "gbdt.max_depth": ("gbdt", "max_depth"),
    "gbdt.learning_rate": ("gbdt", "learning_rate"),
    "gbdt.reg_lambda": ("gbdt", "reg_lambda"),
    "gbdt.min_split_gain": ("gbdt", "min_split_gain"),
    "gbdt.min_child_hessian": ("gbdt", "min_child_hessian"),
    "gbdt.base_score": ("gbdt", "base_score"),
    "gbdt.subsample": ("gbdt", "subsample"),
    "gbdt.colsample": ("gbdt", "colsample"),
    "cv.folds": (None, "folds"),
    "cv.threshold": (None, "threshold"),
    "cv.leaky_similarities": (None, "leaky_similarities"),
    "cv.shuffle_labels": (None, "shuffle_labels"),
    "seed": (None, "master_seed"),
}


def _get(cfg: PipelineConfig, key: str):
    section, name = KEYS[key]
    obj = cfg if section is None else getattr(cfg, section)
    return getattr(obj, name)


def _parse_value(raw: str, current):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    if isinstance(current, bool):
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        parts = [p for p in raw.strip("()[]").replace("x", ",").split(",") if p.strip()]
        values = tuple(int(p) for p in parts)
        if len(values) != len(current):
            raise ValueError(f"expected {len(current)} integers")
        return values
    return raw


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(cfg: PipelineConfig, items, source: str = "override") -> PipelineConfig:
    """Apply ``(lineno, key, raw_value)`` triples, validating each key."""
    top: dict = {}
    sections: dict[str, dict] = {}
    for lineno, key, raw in items:
        where = f"{source}:{lineno}" if lineno is not None else source
        if key not in KEYS:
            raise ConfigError(f"{where}: unknown config key {key!r}")
        try:
            value = _parse_value(raw, _get(cfg, key))
        except ValueError as exc:
            raise ConfigError(f"{where}: invalid value for {key}: {exc}") from None
        section, name = KEYS[key]
        if section is None:
            top[name] = value
        else:
            sections.setdefault(section, {})[name] = value
    try:
        for section, changes in sections.items():
            top[section] = dataclasses.replace(getattr(cfg, section), **changes)
        result = dataclasses.replace(cfg, **top)
        result.network_spec(64)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: invalid configuration: {exc}") from None
    return result


def parse_config_text(text: str, source: str = "<config>") -> PipelineConfig:
    items = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key")
        items.append((lineno, key, raw))
    return apply_overrides(PipelineConfig(), items, source)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config_text(text, str(path))


def parse_overrides(pairs, cfg: PipelineConfig) -> PipelineConfig:
    items = []
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, raw = pair.split("=", 1)
        items.append((None, key.strip(), raw))
    return apply_overrides(cfg, items, "--set")


def format_config(cfg: PipelineConfig) -> str:
    """Fully resolved config in the same ``key = value`` syntax ``load_config`` reads."""
    return "".join(f"{key} = {_format_value(_get(cfg, key))}\n" for key in KEYS)


def derive_seed(master_seed: int, fold_id: int, stage: str) -> int:
    """64-bit seed for one (fold, stage): the first 8 bytes of BLAKE2b over
    ``"{master_seed}:{fold_id}:{stage}"`` read as an unsigned little-endian integer.
    """
    if stage not in STAGES:
        raise ValueError(f"unknown seed stage {stage!r}; expected one of {', '.join(STAGES)}")
    digest = hashlib.blake2b(f"{int(master_seed)}:{int(fold_id)}:{stage}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeedTree:
    master_seed: int

    def seed(self, fold_id: int, stage: str) -> int:
        return derive_seed(self.master_seed, fold_id, stage)
