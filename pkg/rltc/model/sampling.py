from __future__ import annotations

import numpy as np

from rltc.model.layers import softmax


def sample_token(logits_row: np.ndarray, temperature: float, rng: np.random.Generator) -> int:
    """
    Draw one token id from ``softmax(logits / temperature)``.

    Uses a single uniform draw and the inverse CDF so a seeded generator gives a
    reproducible sequence. Very small temperatures converge to :func:`greedy_token`.
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    probs = softmax(np.asarray(logits_row, dtype=np.float64) / temperature)
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), probs.size - 1))


def sample_tokens(logits: np.ndarray, temperature: float, rngs) -> np.ndarray:
    """Row-wise :func:`sample_token` with one generator per row."""
    return np.array([sample_token(row, temperature, rng) for row, rng in zip(logits, rngs)], dtype=np.int64)


def greedy_token(logits_row: np.ndarray, limit: int | None = None) -> int:
    """Argmax over ``logits_row[:limit]`` (all ids when ``limit`` is None); ties go to the lowest id."""
    row = np.asarray(logits_row)
    if limit is not None:
        row = row[:limit]
    return int(np.argmax(row))


def greedy_tokens(logits: np.ndarray, limit: int | None = None) -> np.ndarray:
    rows = logits if limit is None else logits[:, :limit]
    return np.argmax(rows, axis=-1).astype(np.int64)
