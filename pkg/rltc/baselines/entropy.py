from __future__ import annotations

from typing import Sequence

import numpy as np


class NotADistribution(ValueError):
    pass


def entropy(p: Sequence[float] | np.ndarray, tol: float = 1e-9) -> float:
    """
    Shannon entropy in bits; zero-probability terms contribute nothing.

    Raises:
        NotADistribution: negative entries, empty input, or a sum off 1 by more than ``tol``.
    """
    probs = np.asarray(p, dtype=np.float64).ravel()
    if probs.size == 0:
        raise NotADistribution("empty probability vector")
    if (probs < 0).any() or not np.isfinite(probs).all():
        raise NotADistribution("probabilities must be finite and >= 0")
    if abs(float(probs.sum()) - 1.0) > tol:
        raise NotADistribution(f"probabilities sum to {probs.sum():.12f}, not 1")
    nz = probs[probs > 0]
    return max(float(-(nz * np.log2(nz)).sum()), 0.0)


def empirical_distribution(symbols: bytes | Sequence[int], alphabet_size: int = 256) -> np.ndarray:
    data = np.frombuffer(symbols, dtype=np.uint8) if isinstance(symbols, (bytes, bytearray)) else np.asarray(symbols)
    if data.size == 0:
        return np.zeros(alphabet_size)
    counts = np.bincount(data.astype(np.int64), minlength=alphabet_size).astype(np.float64)
    return counts / counts.sum()


def empirical_entropy(symbols: bytes | Sequence[int], alphabet_size: int = 256) -> float:
    """Order-0 entropy (bits per symbol) of the symbol frequencies in ``symbols``."""
    dist = empirical_distribution(symbols, alphabet_size)
    if not dist.any():
        return 0.0
    return entropy(dist)


def entropy_bound_bits(symbols: bytes | Sequence[int], alphabet_size: int = 256) -> float:
    """``n * H`` for the empirical distribution of ``symbols``."""
    return len(symbols) * empirical_entropy(symbols, alphabet_size)

