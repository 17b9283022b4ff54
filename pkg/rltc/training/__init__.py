from rltc.training.schedules import RewardNormalizer, RewardSchedule, scale_reward
from rltc.training.trainer import (
    EmptyCorpus,
    StepMetrics,
    TrainerConfig,
    TrainerState,
    TrainingResult,
    pretrain_identity,
    rollout_compress,
    run_training,
    train_step,
)
from rltc.training.trajectory import Trajectory, actor_loss, assign_rewards, compute_advantages, critic_loss

__all__ = [
    "EmptyCorpus",
    "RewardNormalizer",
    "RewardSchedule",
    "StepMetrics",
    "TrainerConfig",
    "TrainerState",
    "TrainingResult",
    "Trajectory",
    "actor_loss",
    "assign_rewards",
    "compute_advantages",
    "critic_loss",
    "pretrain_identity",
    "rollout_compress",
    "run_training",
    "scale_reward",
    "train_step",
]
