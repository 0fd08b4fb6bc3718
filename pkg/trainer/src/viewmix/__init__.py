"""Toy-scale inter-viewpoint mixer: model, data loading, training."""

from .data import PairSet, read_manifest, split_train_holdout
from .model import ConfigError, MixerConfig, ShapeError, ViewMixer, build_model, parameter_count
from .train import (
    TrainState,
    TrainingDiverged,
    enhance_and_score,
    filter_degraded,
    l1_loss,
    load_checkpoint,
    loss_trend,
    psnr_db,
    save_run,
    train_loop,
)

__all__ = [
    "ConfigError",
    "MixerConfig",
    "PairSet",
    "ShapeError",
    "TrainState",
    "TrainingDiverged",
    "ViewMixer",
    "build_model",
    "enhance_and_score",
    "filter_degraded",
    "l1_loss",
    "load_checkpoint",
    "loss_trend",
    "parameter_count",
    "psnr_db",
    "read_manifest",
    "save_run",
    "split_train_holdout",
    "train_loop",
]
