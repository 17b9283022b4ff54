"""Fixed-width packing of token ids, most significant bit first."""

from __future__ import annotations

import numpy as np


class TokenOutOfRange(ValueError):
    pass


class PayloadTruncated(ValueError):
    pass


def bits_per_token(vocab: int) -> int:
    """``ceil(log2(vocab))``, at least 1."""
    if vocab < 2:
        raise ValueError(f"vocab must be >= 2, got {vocab}")
    return (vocab - 1).bit_length()


def packed_size(n_tokens: int, vocab: int) -> int:
    return -(-n_tokens * bits_per_token(vocab) // 8)


def pack_tokens(tokens, vocab: int) -> bytes:
    """
    Pack ids into ``bits_per_token(vocab)``-bit words; the last byte is zero-padded.

    Args:
        tokens: Token ids, each in ``[0, vocab)``.
        vocab: Vocabulary size that fixes the word width.

    Returns:
        ``packed_size(len(tokens), vocab)`` bytes.
    """
    ids = np.asarray(tokens, dtype=np.int64).ravel()
    if ids.size == 0:
        return b""
    if ids.min() < 0 or ids.max() >= vocab:
        bad = int(ids[(ids < 0) | (ids >= vocab)][0])
        raise TokenOutOfRange(f"token id {bad} outside vocab of {vocab}")
    width = bits_per_token(vocab)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    bits = ((ids[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bits.ravel()).tobytes()


def unpack_tokens(payload: bytes, n_tokens: int, vocab: int) -> np.ndarray:
    """Inverse of :func:`pack_tokens`; ``payload`` must be exactly ``packed_size`` bytes."""
    if n_tokens < 0:
        raise ValueError("n_tokens must be >= 0")
    expected = packed_size(n_tokens, vocab)
    if len(payload) < expected:
        raise PayloadTruncated(f"payload has {len(payload)} bytes, {n_tokens} tokens need {expected}")
    if len(payload) > expected:
        raise ValueError(f"payload has {len(payload) - expected} trailing bytes")
    if n_tokens == 0:
        return np.zeros(0, dtype=np.int64)
    width = bits_per_token(vocab)
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[: n_tokens * width]
    words = bits.reshape(n_tokens, width).astype(np.int64)
    ids = words @ (1 << np.arange(width - 1, -1, -1, dtype=np.int64))
    if ids.max() >= vocab:
        raise TokenOutOfRange(f"unpacked token id {int(ids.max())} outside vocab of {vocab}")
    return ids
