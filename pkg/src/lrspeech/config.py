"""Pipeline configuration: one JSON document mirroring module parameters.

Unknown keys anywhere in the document are errors, so a typo cannot
silently fall back to a default.  Every run embeds the resolved config's
hash in its output metadata.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .features import FeatureParams
from .ioutil import fingerprint_json
from .segment import PauseParams, SubsetSpec


@dataclass(frozen=True)
class AugmentConfig:
    copies: int = 5
    snr_db: float = 20.0
    seed: int = 0


@dataclass(frozen=True)
class SamplerSection:
    mode: str = "binned"
    batch_size: int = 32
    lr_weight: int = 1
    seed: int = 0
    n_batches: int = 200


@dataclass(frozen=True)
class TrainConfig:
    # cepstral-mean targets carry a large energy coefficient; keep the
    # default step small enough that plain SGD stays stable on them
    epochs: int = 1
    learning_rate: float = 0.002
    seed: int = 0
    cepstral_order: int = 12


@dataclass(frozen=True)
class EvalConfig:
    cepstral_order: int = 12
    include_c0: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    features: FeatureParams = field(default_factory=FeatureParams)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    pauses: PauseParams = field(default_factory=PauseParams)
    subset_minutes: float = 5.0
    sampler: SamplerSection = field(default_factory=SamplerSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_json(self) -> dict:
        return {
            "features": asdict(self.features),
            "augment": asdict(self.augment),
            "pauses": asdict(self.pauses),
            "subset_minutes": self.subset_minutes,
            "sampler": asdict(self.sampler),
            "train": asdict(self.train),
            "eval": asdict(self.eval),
        }

    def config_hash(self) -> str:
        return fingerprint_json(self.to_json())

    @property
    def subset_spec(self) -> SubsetSpec:
        return SubsetSpec(target_minutes=self.subset_minutes)


_SECTIONS = {
    "features": FeatureParams,
    "augment": AugmentConfig,
    "pauses": PauseParams,
    "sampler": SamplerSection,
    "train": TrainConfig,
    "eval": EvalConfig,
}


def _build_section(cls, obj: dict, section: str):
    defaults = cls()
    known = set(asdict(defaults))
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    try:
        return cls(**{**asdict(defaults), **obj})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {section!r} section: {exc}") from None


def parse_config(obj: dict) -> PipelineConfig:
    known = set(_SECTIONS) | {"subset_minutes"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kwargs = {}
    for section, cls in _SECTIONS.items():
        raw = obj.get(section, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"section {section!r} must be an object")
        kwargs[section] = _build_section(cls, raw, section)
    minutes = obj.get("subset_minutes", 5.0)
    if not isinstance(minutes, (int, float)) or isinstance(minutes, bool) or minutes <= 0:
        raise ConfigError(f"subset_minutes must be a positive number, got {minutes!r}")
    return PipelineConfig(subset_minutes=float(minutes), **kwargs)


def load_config(path: str | Path) -> PipelineConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(obj)
