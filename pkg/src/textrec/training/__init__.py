from .losses import LossReport, TrainConfig, kl_loss, lambda2_at, multinomial_nll, ot_loss, total_loss
from .loop import (
    BackboneTrainConfig,
    EpochRecord,
    MissingProfileError,
    TrainData,
    TrainResult,
    UserEvalCase,
    checkpoint_metric,
    evaluate_ndcg,
    prepare_training_data,
    train,
    train_backbone,
    write_history,
    write_manifest,
)

__all__ = [
    "BackboneTrainConfig",
    "EpochRecord",
    "LossReport",
    "MissingProfileError",
    "TrainConfig",
    "TrainData",
    "TrainResult",
    "UserEvalCase",
    "checkpoint_metric",
    "evaluate_ndcg",
    "kl_loss",
    "lambda2_at",
    "multinomial_nll",
    "ot_loss",
    "prepare_training_data",
    "total_loss",
    "train",
    "train_backbone",
    "write_history",
    "write_manifest",
]
