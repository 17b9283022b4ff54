from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from rltc.ingestion.tokenizer import VOCAB

NORMALIZER_EPS = 1e-8


@dataclass(frozen=True)
class RewardSchedule:
    """
    Price of one compressed token, ramped linearly from 0 over ``warmup_steps``.

    The final price defaults to ``log2(|V|)`` bits, the cost of sending a token
    uncompressed.
    """

    final_cost_per_token: float = math.log2(VOCAB.size)
    warmup_steps: int = 500

    def __post_init__(self) -> None:
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if self.final_cost_per_token < 0:
            raise ValueError("final_cost_per_token must be >= 0")

    def cost(self, step: int) -> float:
        if self.warmup_steps == 0 or step >= self.warmup_steps:
            return self.final_cost_per_token
        return self.final_cost_per_token * max(step, 0) / self.warmup_steps


class RewardNormalizer:
    """Running mean/variance of episode rewards (Welford)."""

    def __init__(self, eps: float = NORMALIZER_EPS):
        self.eps = eps
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    @property
    def variance(self) -> float:
        if self.count == 0:
            return 0.0
        return max(self._m2 / self.count, 0.0)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    def affine(self) -> Tuple[float, float]:
        """Current ``(shift, scale)``; identity until two rewards have been seen."""
        if self.count < 2:
            return 0.0, 1.0
        return self.mean, max(self.std, self.eps)

    def state_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "m2": self._m2}


def reward_affine(normalizer: RewardNormalizer, episode_reward: float) -> Tuple[float, float]:
    """``(shift, scale)`` from the statistics so far; ``episode_reward`` is folded in afterwards."""
    shift, scale = normalizer.affine()
    normalizer.update(episode_reward)
    return shift, scale


def scale_reward(normalizer: RewardNormalizer, episode_reward: float) -> float:
    """Normalize ``episode_reward`` with the statistics so far, then fold it into them."""
    shift, scale = reward_affine(normalizer, episode_reward)
    return (episode_reward - shift) / scale
