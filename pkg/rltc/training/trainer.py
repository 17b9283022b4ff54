"""
Actor-critic training of the compressor against a supervised decompressor.

One :func:`train_step` runs a full round on a batch of chunks: sample compressed
sequences from the compressor, reconstruct the chunks with the decompressor,
update the decompressor on its reconstruction loss, turn the loss and the
compressed length into rewards, and update the compressor with the actor and
critic losses.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from rltc.ingestion.tokenizer import BOS, PAD, STOP, VOCAB, Chunk, stack_chunks
from rltc.model.framing import (
    chunk_targets,
    compressor_identity_targets,
    decompressor_encoder_inputs,
    strip_stop,
    teacher_forced_inputs,
)
from rltc.model.layers import log_softmax
from rltc.model.optim import OptimizerState, adam_step
from rltc.model.params import ModelParams
from rltc.model.sampling import sample_token
from rltc.model.transformer import (
    IncrementalDecoder,
    Tape,
    backward,
    forward_decoder,
    forward_encoder,
    lm_loss_and_grad,
    sequence_cost_bits,
    token_cross_entropy,
)
from rltc.training.run_dir import RunDirectory
from rltc.training.schedules import RewardNormalizer, RewardSchedule, reward_affine
from rltc.training.trajectory import (
    Trajectory,
    actor_logit_grad,
    actor_loss,
    apply_reward_scaling,
    assign_rewards,
    compute_advantages,
    critic_loss,
    critic_value_grad,
    pad_steps,
)

logger = logging.getLogger(__name__)


class EmptyCorpus(ValueError):
    pass


class TrainerConfig(BaseModel):
    """Hyperparameters of identity pre-training and the actor-critic loop."""

    model_config = ConfigDict(extra="forbid")

    chunk_len: int = Field(32, ge=1, le=128)
    batch_size: int = Field(16, ge=1)
    gamma: float = Field(0.99, gt=0.0, le=1.0)
    max_compress_len: Optional[int] = Field(None, ge=1)
    temperature: float = Field(1.0, gt=0.0)
    critic_loss_weight: float = Field(0.5, ge=0.0)
    learning_rate: float = Field(3e-4, ge=0.0)
    pretrain_learning_rate: float = Field(1e-3, ge=0.0)
    pretrain_steps: int = Field(0, ge=0)
    steps: int = Field(100, ge=0)
    warmup_steps: int = Field(500, ge=0)
    final_cost_per_token: float = Field(math.log2(VOCAB.size), ge=0.0)
    reconstruction_cost: Literal["sum_bits", "mean_nats"] = "sum_bits"
    reward_scaling: bool = True
    seed: int = 0
    checkpoint_every: int = Field(0, ge=0)
    log_every: int = Field(50, ge=1)

    @model_validator(mode="after")
    def _cap_within_chunk(self) -> "TrainerConfig":
        if self.max_compress_len is not None and self.max_compress_len > self.chunk_len:
            raise ValueError(
                f"max_compress_len ({self.max_compress_len}) must not exceed chunk_len ({self.chunk_len})"
            )
        return self

    @property
    def cap(self) -> int:
        return self.max_compress_len if self.max_compress_len is not None else self.chunk_len

    def schedule(self) -> RewardSchedule:
        return RewardSchedule(final_cost_per_token=self.final_cost_per_token, warmup_steps=self.warmup_steps)


@dataclass
class TrainerState:
    """Everything that changes from one training step to the next."""

    compressor: ModelParams
    decompressor: ModelParams
    compressor_opt: OptimizerState
    decompressor_opt: OptimizerState
    schedule: RewardSchedule
    normalizer: RewardNormalizer = field(default_factory=RewardNormalizer)
    step: int = 0

    @classmethod
    def create(cls, compressor: ModelParams, decompressor: ModelParams, cfg: TrainerConfig) -> "TrainerState":
        if compressor.config.vocab != decompressor.config.vocab:
            raise ValueError(
                f"compressor vocab {compressor.config.vocab} != decompressor vocab {decompressor.config.vocab}"
            )
        return cls(
            compressor=compressor,
            decompressor=decompressor,
            compressor_opt=OptimizerState.for_params(compressor, cfg.learning_rate),
            decompressor_opt=OptimizerState.for_params(decompressor, cfg.learning_rate),
            schedule=cfg.schedule(),
        )


@dataclass
class StepMetrics:
    L_D: float
    mean_c_len: float
    actor_loss: float
    critic_loss: float
    raw_reward: float
    scaled_reward: float
    cost_per_token: float

    def as_row(self, step: int) -> dict:
        return {"step": step, **asdict(self)}

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in asdict(self).values())


@dataclass
class TrainingResult:
    state: TrainerState
    pretrain_losses: dict = field(default_factory=dict)
    history: List[StepMetrics] = field(default_factory=list)


# -------------------------- identity pre-training --------------------------


def _identity_batch(chunks: Sequence[Chunk], role: str, cap: int):
    ids, valid = stack_chunks(chunks)
    if role == "compressor":
        targets = compressor_identity_targets(ids, valid, cap)
        return ids, valid, teacher_forced_inputs(targets), targets
    if role == "decompressor":
        enc_ids, enc_valid = decompressor_encoder_inputs([c.payload for c in chunks], ids.shape[1])
        targets = chunk_targets(ids, valid)
        return enc_ids, enc_valid, teacher_forced_inputs(targets), targets
    raise ValueError(f"unknown role {role!r}")


def pretrain_identity(
    params: ModelParams,
    chunks: Sequence[Chunk],
    steps: int,
    *,
    role: Literal["compressor", "decompressor"] = "compressor",
    learning_rate: float = 1e-3,
    batch_size: int = 16,
    cap: Optional[int] = None,
    seed: int = 0,
    progress: bool = False,
) -> Tuple[ModelParams, List[float]]:
    """
    Supervised training where the target is the input.

    Args:
        params: Network to train, updated in place.
        chunks: Training chunks, all of one size.
        steps: Number of optimizer steps; 0 leaves ``params`` untouched.
        role: ``"compressor"`` learns chunk -> chunk + STOP (truncated to ``cap``);
            ``"decompressor"`` learns ``[BOS] + chunk`` -> chunk.
        learning_rate: Adam step size.
        batch_size: Chunks per step, drawn with a generator seeded by ``seed``.
        cap: Compression cap for the compressor role (defaults to the chunk size).

    Returns:
        ``(params, losses)`` with the mean cross-entropy (nats) of each step
        measured before its update.
    """
    if not chunks:
        raise EmptyCorpus("identity pre-training needs at least one chunk")
    width = chunks[0].size
    cap = width if cap is None else cap
    rng = np.random.default_rng(seed)
    optimizer = OptimizerState.for_params(params, learning_rate)
    losses: List[float] = []

    for _ in tqdm(range(steps), desc=f"pretrain {role}", disable=not progress):
        picked = rng.choice(len(chunks), size=batch_size, replace=len(chunks) < batch_size)
        enc_ids, enc_valid, dec_in, targets = _identity_batch([chunks[i] for i in picked], role, cap)
        tape = Tape()
        enc = forward_encoder(params, enc_ids, enc_valid, tape)
        logits, _ = forward_decoder(params, enc, dec_in, enc_valid, tape)
        loss, dlogits = lm_loss_and_grad(logits, targets)
        adam_step(params, backward(params, tape, dlogits=dlogits), optimizer)
        losses.append(loss)

    if losses:
        logger.info("Identity pre-training (%s): %d steps, loss %.4f -> %.4f", role, steps, losses[0], losses[-1])
    return params, losses


# -------------------------- rollouts --------------------------


def rollout_batch(
    params: ModelParams,
    chunks: Sequence[Chunk],
    cfg: TrainerConfig,
    rngs: Sequence[np.random.Generator],
) -> List[Trajectory]:
    """
    Sample compressed sequences for a batch of chunks in one cached pass.

    Row ``b`` samples with ``rngs[b]`` only, so the result for a chunk does not
    depend on what else is in the batch.
    """
    ids, valid = stack_chunks(chunks)
    cap = min(cfg.cap, ids.shape[1])
    enc = forward_encoder(params, ids, valid)
    decoder = IncrementalDecoder(params, enc, valid)

    batch = len(chunks)
    actions: List[List[int]] = [[] for _ in range(batch)]
    logprobs: List[List[float]] = [[] for _ in range(batch)]
    values: List[List[float]] = [[] for _ in range(batch)]
    active = np.ones(batch, dtype=bool)
    feed = np.full(batch, BOS, dtype=np.int64)

    for _ in range(cap):
        logits, step_values = decoder.step(feed)
        logp = log_softmax(logits / cfg.temperature)
        feed = np.full(batch, PAD, dtype=np.int64)
        for b in np.flatnonzero(active):
            token = sample_token(logits[b], cfg.temperature, rngs[b])
            actions[b].append(token)
            logprobs[b].append(float(logp[b, token]))
            values[b].append(float(step_values[b]))
            feed[b] = token
            if token == STOP:
                active[b] = False
        if not active.any():
            break

    return [
        Trajectory(
            actions=np.array(actions[b], dtype=np.int64),
            logprobs=np.array(logprobs[b]),
            values=np.array(values[b]),
            chunk_index=chunks[b].index,
        )
        for b in range(batch)
    ]


def rollout_compress(params: ModelParams, chunk: Chunk, cfg: TrainerConfig, rng: np.random.Generator) -> Trajectory:
    """Sample one compressed sequence from BOS until STOP or the length cap."""
    return rollout_batch(params, [chunk], cfg, [rng])[0]


def teacher_forced_policy(
    params: ModelParams,
    chunks: Sequence[Chunk],
    trajs: Sequence[Trajectory],
    temperature: float = 1.0,
    tape: Optional[Tape] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Recompute a batch of sampled trajectories in one parallel decoder pass.

    Returns:
        ``(logits, logprobs, values, mask)``; ``logprobs``, ``values`` and ``mask``
        are (B, T_max) and only entries under ``mask`` belong to a trajectory.
    """
    ids, valid = stack_chunks(chunks)
    actions = pad_steps(trajs, "actions", fill=PAD)
    steps = np.array([t.n_steps for t in trajs])
    mask = np.arange(actions.shape[1])[None, :] < steps[:, None]

    enc = forward_encoder(params, ids, valid, tape)
    logits, values = forward_decoder(params, enc, teacher_forced_inputs(actions), valid, tape)
    logp = np.take_along_axis(log_softmax(logits / temperature), actions[..., None], axis=-1)[..., 0]
    return logits, np.where(mask, logp, 0.0), np.where(mask, values, 0.0), mask


def chunk_rngs(seed: int, step: int, count: int) -> List[np.random.Generator]:
    return [np.random.default_rng([seed, step, i]) for i in range(count)]


# -------------------------- one actor-critic round --------------------------


def _reconstruction_costs(logits: np.ndarray, targets: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sum_bits":
        return sequence_cost_bits(logits, targets)
    ce, mask = token_cross_entropy(logits, targets)
    return ce.sum(axis=-1) / np.maximum(mask.sum(axis=-1), 1)


def train_step(
    state: TrainerState,
    chunks: Sequence[Chunk],
    cfg: TrainerConfig,
    rngs: Optional[Sequence[np.random.Generator]] = None,
) -> StepMetrics:
    """
    One round on a batch: compress, reconstruct, update both networks.

    The decompressor is updated from its reconstruction loss only; the
    compressor from ``actor_loss + critic_loss_weight * critic_loss``.
    """
    if not chunks:
        raise EmptyCorpus("train_step needs at least one chunk")
    if rngs is None:
        rngs = chunk_rngs(cfg.seed, state.step, len(chunks))
    comp, decomp = state.compressor, state.decompressor
    cost = state.schedule.cost(state.step)

    # compress
    trajs = rollout_batch(comp, chunks, cfg, rngs)

    # decompress and score the reconstruction
    ids, valid = stack_chunks(chunks)
    targets = chunk_targets(ids, valid)
    enc_ids, enc_valid = decompressor_encoder_inputs([strip_stop(t.actions) for t in trajs], ids.shape[1])
    tape_d = Tape()
    enc_d = forward_encoder(decomp, enc_ids, enc_valid, tape_d)
    logits_d, _ = forward_decoder(decomp, enc_d, teacher_forced_inputs(targets), enc_valid, tape_d)
    loss_d, dlogits_d = lm_loss_and_grad(logits_d, targets)
    recon = _reconstruction_costs(logits_d, targets, cfg.reconstruction_cost)

    adam_step(decomp, backward(decomp, tape_d, dlogits=dlogits_d), state.decompressor_opt)

    # rewards, reward scaling, advantages
    scored: List[Trajectory] = []
    scaled_totals = []
    for traj, cost_d in zip(trajs, recon):
        traj = assign_rewards(traj, float(cost_d), cost)
        if cfg.reward_scaling:
            shift, scale = reward_affine(state.normalizer, traj.episode_reward)
            traj = apply_reward_scaling(traj, shift, scale)
        traj = compute_advantages(traj, cfg.gamma)
        scaled_totals.append(float(traj.rewards.sum()))
        scored.append(traj)

    # actor and critic update
    tape_c = Tape()
    logits_c, _, _, mask = teacher_forced_policy(comp, chunks, scored, cfg.temperature, tape_c)
    actions = pad_steps(scored, "actions", fill=0)
    advantages = pad_steps(scored, "advantages")
    dlogits_c = actor_logit_grad(logits_c, actions, advantages, mask, cfg.temperature)
    dvalues_c = critic_value_grad(advantages, mask, cfg.critic_loss_weight)
    adam_step(comp, backward(comp, tape_c, dlogits=dlogits_c, dvalues=dvalues_c), state.compressor_opt)

    state.step += 1
    metrics = StepMetrics(
        L_D=loss_d,
        mean_c_len=float(np.mean([strip_stop(t.actions).size for t in scored])),
        actor_loss=actor_loss(scored),
        critic_loss=critic_loss(scored),
        raw_reward=float(np.mean([t.episode_reward for t in scored])),
        scaled_reward=float(np.mean(scaled_totals)),
        cost_per_token=cost,
    )
    logger.debug("Step %d: %s", state.step, metrics)
    return metrics


# -------------------------- full run --------------------------


def _config_capture(cfg: TrainerConfig, state: TrainerState, extra: Optional[dict]) -> dict:
    values = {f"trainer.{k}": v for k, v in cfg.model_dump().items()}
    values.update({f"compressor.{k}": v for k, v in state.compressor.config.model_dump().items()})
    values.update({f"decompressor.{k}": v for k, v in state.decompressor.config.model_dump().items()})
    values.update(extra or {})
    return values


def run_training(
    compressor: ModelParams,
    decompressor: ModelParams,
    chunks: Sequence[Chunk],
    cfg: TrainerConfig,
    run_dir: Optional[str | Path] = None,
    *,
    extra_config: Optional[dict] = None,
    progress: bool = True,
) -> TrainingResult:
    """
    Pre-train both networks on identity, then run ``cfg.steps`` actor-critic rounds.

    When ``run_dir`` is given, the configuration, one metrics row per step and
    the final checkpoints are written there.
    """
    if not chunks:
        raise EmptyCorpus("training corpus produced no chunks")
    state = TrainerState.create(compressor, decompressor, cfg)
    result = TrainingResult(state=state)
    out = RunDirectory(run_dir) if run_dir is not None else None
    if out is not None:
        out.write_config(_config_capture(cfg, state, extra_config))
        out.reset_metrics()

    logger.info(
        "Training on %d chunks of %d tokens: %d pre-training steps, %d A2C steps, batch %d",
        len(chunks), chunks[0].size, cfg.pretrain_steps, cfg.steps, cfg.batch_size,
    )
    for role, params in (("compressor", compressor), ("decompressor", decompressor)):
        _, losses = pretrain_identity(
            params, chunks, cfg.pretrain_steps,
            role=role, learning_rate=cfg.pretrain_learning_rate, batch_size=cfg.batch_size,
            cap=cfg.cap, seed=cfg.seed, progress=progress,
        )
        result.pretrain_losses[role] = losses

    sampler = np.random.default_rng(cfg.seed)
    bar = tqdm(range(cfg.steps), desc="a2c", disable=not progress)
    for _ in bar:
        picked = sampler.choice(len(chunks), size=cfg.batch_size, replace=len(chunks) < cfg.batch_size)
        step = state.step
        metrics = train_step(state, [chunks[i] for i in picked], cfg)
        result.history.append(metrics)
        if out is not None:
            out.append_metrics(metrics.as_row(step))
            if cfg.checkpoint_every and state.step % cfg.checkpoint_every == 0:
                out.save_models(compressor, decompressor)
        bar.set_postfix(L_D=f"{metrics.L_D:.3f}", c_len=f"{metrics.mean_c_len:.1f}")
        if step % cfg.log_every == 0:
            logger.info(
                "step %d: L_D=%.4f mean|c|=%.2f actor=%.4f critic=%.4f reward=%.3f cost=%.3f",
                step, metrics.L_D, metrics.mean_c_len, metrics.actor_loss,
                metrics.critic_loss, metrics.raw_reward, metrics.cost_per_token,
            )

    if out is not None:
        out.save_models(compressor, decompressor)
    return result
