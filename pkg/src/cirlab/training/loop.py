"""Two-stage training schedule with parameter-group freezing.

Stage 1 adapts to the synthetic pretraining corpus: the backbone stays
frozen while adapters, fusion, and mixer train, with the auxiliary
caption-retrieval task available when the dataset carries captions.
Stage 2 fine-tunes on a downstream triplet set: adapters freeze too, the
auxiliary task switches off, and only fusion and mixer move.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..errors import ConfigurationError
from ..model.checkpoint import save_checkpoint
from ..model.network import CirModel
from ..seeding import np_rng
from .data import TripletDataset
from .losses import cir_loss, ctr_loss

STAGE1 = "stage1_pretrain"
STAGE2 = "stage2_finetune"
OPTIMIZERS = ("adamw", "adam", "sgd")
LR_SCHEDULES = ("cosine", "constant")


@dataclass
class StageConfig:
    """One training stage: task mix, frozen groups, optimizer settings."""

    stage: str = STAGE1
    use_ctr: bool = True
    frozen_groups: set[str] = field(default_factory=lambda: {"backbone"})
    optimizer_name: str = "adamw"
    learning_rate: float = 1e-4
    lr_schedule: str = "cosine"
    weight_decay: float = 0.01
    batch_size: int = 8
    epochs: int = 1
    seed: int = 0
    temperature: float = 1.0
    loss_weight_cir: float = 1.0
    loss_weight_ctr: float = 1.0

    def validate(self) -> None:
        if self.stage not in (STAGE1, STAGE2):
            raise ConfigurationError(
                f"stage must be {STAGE1!r} or {STAGE2!r}, got {self.stage!r}"
            )
        if self.stage == STAGE1 and "backbone" not in self.frozen_groups:
            raise ConfigurationError("stage 1 must freeze the backbone")
        if self.stage == STAGE2:
            if not {"backbone", "adapters"} <= self.frozen_groups:
                raise ConfigurationError(
                    "stage 2 must freeze the backbone and the adapters"
                )
            if self.use_ctr:
                raise ConfigurationError(
                    "stage 2 trains with the retrieval loss only; use_ctr must be false"
                )
        if self.optimizer_name not in OPTIMIZERS:
            raise ConfigurationError(
                f"unknown optimizer {self.optimizer_name!r} (expected one of {OPTIMIZERS})"
            )
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigurationError(
                f"unknown lr schedule {self.lr_schedule!r} (expected one of {LR_SCHEDULES})"
            )
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.batch_size < 2:
            raise ConfigurationError("batch_size must be >= 2 for in-batch negatives")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")


def stage_defaults(stage: int | str) -> StageConfig:
    """Canonical config for stage 1 or stage 2."""
    if stage in (1, STAGE1):
        return StageConfig(stage=STAGE1, use_ctr=True, frozen_groups={"backbone"})
    if stage in (2, STAGE2):
        return StageConfig(
            stage=STAGE2, use_ctr=False, frozen_groups={"backbone", "adapters"}
        )
    raise ConfigurationError(f"unknown stage {stage!r}")


@dataclass
class TrainResult:
    metrics: list[dict]
    checkpoint_paths: list[Path]
    metrics_path: Path | None


def _make_optimizer(config: StageConfig, params) -> torch.optim.Optimizer:
    if config.optimizer_name == "adamw":
        return torch.optim.AdamW(
            params, lr=config.learning_rate, weight_decay=config.weight_decay
        )
    if config.optimizer_name == "adam":
        return torch.optim.Adam(params, lr=config.learning_rate)
    return torch.optim.SGD(params, lr=config.learning_rate)


def train_stage(
    dataset: TripletDataset,
    config: StageConfig,
    model: CirModel,
    out_dir: str | Path | None = None,
) -> TrainResult:
    """Run one training stage; only non-frozen parameter groups change.

    Emits one metrics record per optimization step
    (``{step, epoch, loss_cir, loss_ctr, lr}``) and one checkpoint per
    epoch when ``out_dir`` is given. Deterministic under a fixed seed:
    batches are shuffled by a dedicated substream and the loop is
    single-worker by construction.
    """
    config.validate()
    groups = model.parameter_groups()
    unknown = config.frozen_groups - set(groups)
    if unknown:
        raise ConfigurationError(
            f"unknown frozen parameter groups: {sorted(unknown)} "
            f"(model has {sorted(groups)})"
        )
    if config.use_ctr and not dataset.has_captions:
        raise ConfigurationError(
            "use_ctr requires a dataset with target captions; this one has none"
        )

    for name, module in groups.items():
        trainable = name not in config.frozen_groups and name != "backbone"
        for p in module.parameters():
            p.requires_grad_(trainable)
    trainable_params = [p for p in model.parameters() if p.requires_grad]
    if not trainable_params:
        raise ConfigurationError("every parameter group is frozen; nothing to train")

    optimizer = _make_optimizer(config, trainable_params)
    batches_per_epoch = max(1, math.ceil(len(dataset) / config.batch_size))
    total_steps = config.epochs * batches_per_epoch

    out_dir = Path(out_dir) if out_dir is not None else None
    metrics_path = None
    metrics_fh = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = out_dir / "metrics.jsonl"
        metrics_fh = metrics_path.open("w", encoding="utf-8")

    rng = np_rng(config.seed, "shuffle")
    metrics: list[dict] = []
    checkpoint_paths: list[Path] = []
    step = 0
    try:
        for epoch in range(config.epochs):
            for batch in dataset.batches(
                config.batch_size, rng, with_captions=config.use_ctr
            ):
                lr = config.learning_rate
                if config.lr_schedule == "cosine":
                    lr = config.learning_rate * 0.5 * (
                        1.0 + math.cos(math.pi * step / total_steps)
                    )
                for group in optimizer.param_groups:
                    group["lr"] = lr

                loss_cir = cir_loss(batch, model, config.temperature)
                loss_ctr = None
                total = config.loss_weight_cir * loss_cir
                if config.use_ctr:
                    loss_ctr = ctr_loss(batch, model, config.temperature)
                    total = total + config.loss_weight_ctr * loss_ctr

                optimizer.zero_grad()
                total.backward()
                optimizer.step()

                record = {
                    "step": step,
                    "epoch": epoch,
                    "loss_cir": float(loss_cir.item()),
                    "loss_ctr": None if loss_ctr is None else float(loss_ctr.item()),
                    "lr": lr,
                }
                metrics.append(record)
                if metrics_fh is not None:
                    metrics_fh.write(json.dumps(record) + "\n")
                step += 1
            if out_dir is not None:
                path = out_dir / "checkpoints" / f"epoch_{epoch:03d}.pt"
                save_checkpoint(model, path)
                checkpoint_paths.append(path)
    finally:
        if metrics_fh is not None:
            metrics_fh.close()
    return TrainResult(metrics=metrics, checkpoint_paths=checkpoint_paths,
                       metrics_path=metrics_path)
