import math

import numpy as np
import pytest

from rltc.ingestion.tokenizer import STOP
from rltc.training.schedules import RewardNormalizer, RewardSchedule, reward_affine, scale_reward
from rltc.training.trajectory import (
    Trajectory,
    actor_loss,
    apply_reward_scaling,
    assign_rewards,
    compute_advantages,
    critic_loss,
    pad_steps,
)


def _trajectory(n, rng, stop=True):
    actions = rng.integers(0, 256, size=n)
    if stop:
        actions[-1] = STOP
    return Trajectory(actions=actions, logprobs=-rng.random(n), values=rng.normal(size=n))


def test_rewards_sum_to_episode_reward():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(1, 33))
        cost = float(rng.uniform(0, 9))
        recon = float(rng.uniform(0, 500))
        traj = assign_rewards(_trajectory(n, rng), recon, cost)
        assert abs(traj.rewards.sum() - (-(cost * n + recon))) <= 1e-12 * max(1.0, cost * n + recon)
        assert traj.episode_reward == -(cost * n + recon)


def test_reward_layout():
    traj = assign_rewards(_trajectory(3, np.random.default_rng(1)), reconstruction_cost=10.0, cost_per_token=2.0)
    assert traj.rewards.tolist() == [-2.0, -2.0, -12.0]
    assert traj.stopped


def test_assign_rewards_rejects_bad_input():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        assign_rewards(Trajectory(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0)), 1.0, 1.0)
    with pytest.raises(ValueError):
        assign_rewards(_trajectory(2, rng), float("nan"), 1.0)
    with pytest.raises(ValueError):
        Trajectory(actions=np.zeros(3, dtype=np.int64), logprobs=np.zeros(2), values=np.zeros(3))


def test_advantages_are_td_errors():
    traj = Trajectory(
        actions=np.array([1, 2, STOP]),
        logprobs=np.log([0.5, 0.25, 0.5]),
        values=np.array([1.0, 2.0, 3.0]),
        rewards=np.array([-1.0, -1.0, -5.0]),
    )
    out = compute_advantages(traj, gamma=0.5)
    assert out.advantages.tolist() == pytest.approx([-1.0 + 1.0 - 1.0, -1.0 + 1.5 - 2.0, -5.0 - 3.0])


def test_advantages_match_backward_loop():
    rng = np.random.default_rng(12)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        gamma = float(rng.uniform(0.05, 1.0))
        traj = _trajectory(n, rng)
        traj = assign_rewards(traj, float(rng.uniform(0, 50)), float(rng.uniform(0, 9)))
        out = compute_advantages(traj, gamma)

        expected = [0.0] * n
        next_value = 0.0
        for t in reversed(range(n)):
            expected[t] = traj.rewards[t] + gamma * next_value - traj.values[t]
            next_value = traj.values[t]
        np.testing.assert_allclose(out.advantages, expected, rtol=0, atol=1e-12)


def test_actor_and_critic_losses():
    traj = Trajectory(
        actions=np.array([1, STOP]),
        logprobs=np.array([-1.0, -2.0]),
        values=np.zeros(2),
        advantages=np.array([2.0, -1.0]),
    )
    assert actor_loss(traj) == pytest.approx((2.0 - 2.0) / 2)
    assert critic_loss([traj, traj]) == pytest.approx(2.5)


def test_reward_scaling_preserves_episode_reward_and_rescales_sum():
    rng = np.random.default_rng(3)
    traj = assign_rewards(_trajectory(4, rng), 7.0, 1.5)
    scaled = apply_reward_scaling(traj, shift=-10.0, scale=4.0)
    assert scaled.episode_reward == traj.episode_reward
    assert scaled.rewards.sum() == pytest.approx((traj.episode_reward + 10.0) / 4.0)


def test_pad_steps():
    rng = np.random.default_rng(4)
    trajs = [_trajectory(2, rng), _trajectory(4, rng)]
    actions = pad_steps(trajs, "actions", fill=-1)
    assert actions.shape == (2, 4)
    assert actions.dtype == np.int64
    assert actions[0, 2:].tolist() == [-1, -1]


def test_cost_schedule_ramps_to_log2_vocab():
    schedule = RewardSchedule(warmup_steps=500)
    assert schedule.cost(0) == 0.0
    assert schedule.cost(250) == pytest.approx(schedule.final_cost_per_token / 2)
    assert schedule.cost(500) == math.log2(260)
    assert schedule.cost(10_000) == math.log2(260)
    assert round(schedule.cost(500), 4) == 8.0224
    assert RewardSchedule(warmup_steps=0).cost(0) == math.log2(260)
    with pytest.raises(ValueError):
        RewardSchedule(warmup_steps=-1)


def test_cost_schedule_is_monotone():
    schedule = RewardSchedule(warmup_steps=37)
    costs = [schedule.cost(s) for s in range(60)]
    assert all(a <= b for a, b in zip(costs, costs[1:]))


def test_normalizer_matches_population_statistics():
    rng = np.random.default_rng(5)
    values = rng.normal(3.0, 2.0, size=500)
    normalizer = RewardNormalizer()
    for v in values:
        normalizer.update(float(v))
    assert normalizer.count == 500
    assert normalizer.mean == pytest.approx(values.mean())
    assert normalizer.std == pytest.approx(values.std())


def test_scale_reward_uses_statistics_before_update():
    normalizer = RewardNormalizer()
    assert scale_reward(normalizer, 5.0) == 5.0
    assert scale_reward(normalizer, 7.0) == 7.0
    # mean 6, std 1 after two rewards
    assert scale_reward(normalizer, 8.0) == pytest.approx(2.0)
    assert normalizer.count == 3


def test_normalizer_scale_never_zero():
    normalizer = RewardNormalizer()
    for _ in range(5):
        normalizer.update(-3.0)
    shift, scale = normalizer.affine()
    assert shift == -3.0
    assert scale == normalizer.eps


def test_constant_rewards_normalize_to_zero():
    normalizer = RewardNormalizer()
    scaled = [scale_reward(normalizer, -42.5) for _ in range(20)]
    assert scaled[:2] == [-42.5, -42.5]
    assert scaled[2:] == [0.0] * 18


def test_scaled_step_rewards_agree_with_scale_reward():
    rng = np.random.default_rng(13)
    stepwise, reference = RewardNormalizer(), RewardNormalizer()
    for _ in range(50):
        traj = assign_rewards(_trajectory(int(rng.integers(1, 20)), rng), float(rng.uniform(0, 80)), 2.0)
        shift, scale = reward_affine(stepwise, traj.episode_reward)
        scaled = apply_reward_scaling(traj, shift, scale)
        assert scaled.rewards.sum() == pytest.approx(scale_reward(reference, traj.episode_reward), rel=1e-9, abs=1e-9)
    assert stepwise.state_dict() == reference.state_dict()
