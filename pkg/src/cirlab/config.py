"""Run configuration: one YAML file drives every subcommand.

Parsing is strict — unknown keys are rejected with their dotted path, and
a version field guards against stale files. An empty file yields the full
defaults. All randomness in a run flows from the single top-level seed
through named substreams.
"""

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .model.config import ModelConfig
from .seeding import substream
from .structconf import from_dict, to_dict
from .training.loop import StageConfig

CONFIG_VERSION = 1


@dataclass
class BudgetOptions:
    """Spending controls for external annotation services."""

    max_requests: int | None = None
    rate_per_s: float | None = None
    timeout_s: float = 30.0

    def validate(self) -> None:
        if self.max_requests is not None and self.max_requests < 0:
            raise ConfigurationError("pipeline.budget.max_requests must be >= 0")
        if self.rate_per_s is not None and self.rate_per_s <= 0:
            raise ConfigurationError("pipeline.budget.rate_per_s must be positive")
        if self.timeout_s <= 0:
            raise ConfigurationError("pipeline.budget.timeout_s must be positive")


@dataclass
class PipelineOptions:
    """Inputs, workspace, and knobs for the triplet-construction stages."""

    images_manifest: str = "images.jsonl"
    workspace: str = "pipeline_out"
    cache_dir: str | None = None
    embedder: str = "hash_projection"
    embed_dim: int = 64
    top_k: int = 20
    min_similarity: float = 0.3
    caption_max_tokens: int = 128
    workers: int = 1
    holdout_manifest: str | None = None
    caption_endpoint: str | None = None
    synthesis_endpoint: str | None = None
    api_key_env: str = "CIRLAB_API_KEY"
    budget: BudgetOptions = field(default_factory=BudgetOptions)

    def validate(self) -> None:
        if self.top_k < 1:
            raise ConfigurationError("pipeline.top_k must be >= 1")
        if self.embed_dim < 1:
            raise ConfigurationError("pipeline.embed_dim must be >= 1")
        if self.caption_max_tokens < 1:
            raise ConfigurationError("pipeline.caption_max_tokens must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("pipeline.workers must be >= 1")
        self.budget.validate()


@dataclass
class EvalOptions:
    k_values: list[int] = field(default_factory=lambda: [10, 50])
    categories: list[str] | None = None
    dump_qualitative: int = 0

    def validate(self) -> None:
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ConfigurationError("eval.k_values must be positive integers")
        if self.dump_qualitative < 0:
            raise ConfigurationError("eval.dump_qualitative must be >= 0")


@dataclass
class RunConfig:
    """Everything a run needs, snapshot-able next to its outputs."""

    config_version: int = CONFIG_VERSION
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    stage: StageConfig = field(default_factory=StageConfig)
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)
    eval: EvalOptions = field(default_factory=EvalOptions)

    def validate(self) -> None:
        self.model.validate()
        self.stage.validate()
        self.pipeline.validate()
        self.eval.validate()


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a YAML run config; empty files mean all defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file {path} is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping")
    version = raw.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigurationError(
            f"config_version {version!r} is not supported; this build reads "
            f"version {CONFIG_VERSION}. Migrate the file (rename keys per the "
            "README's config reference) or regenerate it from defaults."
        )
    config = from_dict(RunConfig, raw)
    stage_section = raw.get("stage") or {}
    if "seed" not in stage_section:
        config.stage.seed = substream(config.seed, "train")
    config.validate()
    return config


def save_config(config: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        yaml.safe_dump(to_dict(config), sort_keys=False), encoding="utf-8"
    )
    return path
