from rltc.model.config import ModelConfig
from rltc.model.params import CheckpointError, GradientStore, ModelParams
from rltc.model.transformer import (
    EmptyTarget,
    IncrementalDecoder,
    ShapeMismatch,
    Tape,
    backward,
    forward_decoder,
    forward_encoder,
    lm_loss,
    lm_loss_and_grad,
)
from rltc.model.optim import OptimizerState, adam_step
from rltc.model.sampling import greedy_token, greedy_tokens, sample_token

__all__ = [
    "CheckpointError",
    "EmptyTarget",
    "GradientStore",
    "IncrementalDecoder",
    "ModelConfig",
    "ModelParams",
    "OptimizerState",
    "ShapeMismatch",
    "Tape",
    "adam_step",
    "backward",
    "forward_decoder",
    "forward_encoder",
    "greedy_token",
    "greedy_tokens",
    "lm_loss",
    "lm_loss_and_grad",
    "sample_token",
]
