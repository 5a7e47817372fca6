"""Joint CTC/attention training under on-the-fly corruption."""

from avrelscore.training.views import CurriculumStage, MetricsRow, TrainResult, stages_from_config
from avrelscore.training.losses import attention_loss, ctc_greedy_decode, ctc_loss, joint_loss
from avrelscore.training.optimizer import Adam, OptimizerState, adam_step, clip_grad_norm, lr_schedule
from avrelscore.training.trainer import Trainer, check_stages, train
from avrelscore.training.diagnostics import catalog_gradient_check, check_op, model_gradient_check, tiny_model_config

__all__ = [
    "CurriculumStage",
    "MetricsRow",
    "TrainResult",
    "stages_from_config",
    "attention_loss",
    "ctc_greedy_decode",
    "ctc_loss",
    "joint_loss",
    "Adam",
    "OptimizerState",
    "adam_step",
    "clip_grad_norm",
    "lr_schedule",
    "Trainer",
    "check_stages",
    "train",
    "catalog_gradient_check",
    "check_op",
    "model_gradient_check",
    "tiny_model_config",
]
