"""
Per-episode bookkeeping for actor-critic training of the compressor.

An episode is the autoregressive compression of one chunk. The episode reward
``-(cost_per_token * n + L_D)`` is spread over the steps as ``-c`` per emitted
token with the reconstruction cost added on the terminal step, so the per-step
TD terms have rewards to work with while the sum stays the episode reward.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from rltc.ingestion.tokenizer import STOP
from rltc.model.layers import softmax


@dataclass(frozen=True)
class Trajectory:
    """Sampled actions of one episode and the quantities recorded along the way."""

    actions: np.ndarray
    logprobs: np.ndarray
    values: np.ndarray
    rewards: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None
    episode_reward: Optional[float] = None
    chunk_index: int = 0

    def __post_init__(self) -> None:
        n = len(self.actions)
        for name in ("logprobs", "values", "rewards", "advantages"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} steps, actions have {n}")

    @property
    def n_steps(self) -> int:
        return int(len(self.actions))

    @property
    def stopped(self) -> bool:
        """True when the episode ended by emitting STOP rather than hitting the cap."""
        return self.n_steps > 0 and int(self.actions[-1]) == STOP


def assign_rewards(traj: Trajectory, reconstruction_cost: float, cost_per_token: float) -> Trajectory:
    """
    Attach per-step rewards: ``-c`` for every step, ``-c - L_D`` on the last one.

    Args:
        traj: Episode with at least one action.
        reconstruction_cost: ``L_D`` for the chunk; must be finite.
        cost_per_token: Scheduled price of one compressed token.

    Returns:
        A copy of ``traj`` with ``rewards`` and ``episode_reward`` set.
    """
    n = traj.n_steps
    if n < 1:
        raise ValueError("trajectory has no steps")
    if not np.isfinite(reconstruction_cost):
        raise ValueError(f"reconstruction cost must be finite, got {reconstruction_cost}")
    rewards = np.full(n, -float(cost_per_token))
    rewards[-1] -= float(reconstruction_cost)
    episode_reward = -(float(cost_per_token) * n + float(reconstruction_cost))
    return replace(traj, rewards=rewards, episode_reward=episode_reward)


def apply_reward_scaling(traj: Trajectory, shift: float, scale: float) -> Trajectory:
    """
    Rescale per-step rewards so that they sum to ``(R - shift) / scale``.

    Each step is divided by ``scale``; the shift is folded into the terminal
    step. ``episode_reward`` keeps the raw value.
    """
    if traj.rewards is None:
        raise ValueError("rewards are not assigned")
    rewards = traj.rewards / scale
    rewards[-1] -= shift / scale
    return replace(traj, rewards=rewards)


def compute_advantages(traj: Trajectory, gamma: float) -> Trajectory:
    """``A_t = r_t + gamma * v_{t+1} - v_t`` with the value after the last step taken as 0."""
    if traj.rewards is None:
        raise ValueError("rewards are not assigned")
    values = np.asarray(traj.values, dtype=np.float64)
    next_values = np.append(values[1:], 0.0)
    advantages = traj.rewards + gamma * next_values - values
    return replace(traj, advantages=advantages)


def _stacked(trajs: Sequence[Trajectory] | Trajectory, field: str) -> np.ndarray:
    if isinstance(trajs, Trajectory):
        trajs = [trajs]
    parts = []
    for traj in trajs:
        arr = getattr(traj, field)
        if arr is None:
            raise ValueError(f"{field} are not populated")
        parts.append(np.asarray(arr, dtype=np.float64))
    return np.concatenate(parts) if parts else np.zeros(0)


def actor_loss(trajs: Sequence[Trajectory] | Trajectory) -> float:
    """Mean over all steps of ``-logprob_t * A_t``."""
    logprobs = _stacked(trajs, "logprobs")
    advantages = _stacked(trajs, "advantages")
    if logprobs.size == 0:
        return 0.0
    return float(np.mean(-logprobs * advantages))


def critic_loss(trajs: Sequence[Trajectory] | Trajectory) -> float:
    """Mean squared TD error; the advantages are the TD errors."""
    advantages = _stacked(trajs, "advantages")
    if advantages.size == 0:
        return 0.0
    return float(np.mean(advantages**2))


def actor_logit_grad(
    logits: np.ndarray,
    actions: np.ndarray,
    advantages: np.ndarray,
    mask: np.ndarray,
    temperature: float = 1.0,
) -> np.ndarray:
    """
    Gradient of :func:`actor_loss` with respect to the teacher-forced logits.

    The policy is ``softmax(logits / temperature)``; advantages are constants.
    ``actions``, ``advantages`` and ``mask`` are (B, T) with padded steps masked out.
    """
    count = int(mask.sum())
    if count == 0:
        return np.zeros_like(logits)
    probs = softmax(logits / temperature)
    rows = np.nonzero(mask)
    probs[rows + (actions[rows],)] -= 1.0
    weight = np.where(mask, advantages, 0.0) / (count * temperature)
    return probs * weight[..., None]


def critic_value_grad(advantages: np.ndarray, mask: np.ndarray, weight: float = 1.0) -> np.ndarray:
    """Gradient of ``weight * critic_loss`` with respect to the values, TD target held fixed."""
    count = int(mask.sum())
    if count == 0:
        return np.zeros_like(advantages)
    return np.where(mask, -2.0 * advantages, 0.0) * (weight / count)


def pad_steps(trajs: Sequence[Trajectory], field: str, fill: float = 0.0) -> np.ndarray:
    """Stack one per-step field of several trajectories into a (B, T_max) array."""
    width = max((t.n_steps for t in trajs), default=0)
    dtype = np.int64 if field == "actions" else np.float64
    out = np.full((len(trajs), width), fill, dtype=dtype)
    for row, traj in enumerate(trajs):
        arr = getattr(traj, field)
        if arr is None:
            raise ValueError(f"{field} are not populated")
        out[row, : traj.n_steps] = arr
    return out
