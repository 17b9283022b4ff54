"""How chunks and compressed token sequences are laid out as network inputs."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from rltc.ingestion.tokenizer import BOS, PAD, STOP


def teacher_forced_inputs(targets: np.ndarray) -> np.ndarray:
    """Decoder inputs for ``targets``: BOS followed by the targets shifted right by one."""
    t = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    dec = np.empty_like(t)
    dec[:, 0] = BOS
    dec[:, 1:] = t[:, :-1]
    return dec


def decompressor_encoder_inputs(compressed: Sequence[np.ndarray], cap: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Frame compressed sequences for the decompressor's encoder.

    Each row is ``[BOS] + c`` PAD-filled to ``cap + 1`` positions, so an empty
    ``c`` still leaves one visible position.
    """
    ids = np.full((len(compressed), cap + 1), PAD, dtype=np.int64)
    ids[:, 0] = BOS
    valid = np.empty(len(compressed), dtype=np.int64)
    for row, tokens in enumerate(compressed):
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.size > cap:
            raise ValueError(f"compressed sequence of {tokens.size} tokens exceeds cap {cap}")
        ids[row, 1 : 1 + tokens.size] = tokens
        valid[row] = tokens.size + 1
    return ids, valid


def chunk_targets(tokens: np.ndarray, valid_len: np.ndarray) -> np.ndarray:
    """Chunk tokens with every position at or past ``valid_len`` set to PAD (ignored by the loss)."""
    t = np.atleast_2d(np.asarray(tokens, dtype=np.int64)).copy()
    positions = np.arange(t.shape[1])[None, :]
    t[positions >= np.asarray(valid_len)[:, None]] = PAD
    return t


def compressor_identity_targets(tokens: np.ndarray, valid_len: np.ndarray, cap: int) -> np.ndarray:
    """
    Targets that teach the compressor to copy its input.

    The valid tokens (truncated to ``cap``) followed by STOP when there is room,
    PAD afterwards.
    """
    t = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
    out = np.full((t.shape[0], cap), PAD, dtype=np.int64)
    for row, valid in enumerate(np.asarray(valid_len)):
        n = min(int(valid), cap)
        out[row, :n] = t[row, :n]
        if n < cap:
            out[row, n] = STOP
    return out


def strip_stop(actions: np.ndarray) -> np.ndarray:
    """Compressed payload of a trajectory: its actions without a terminating STOP."""
    a = np.asarray(actions, dtype=np.int64)
    if a.size and a[-1] == STOP:
        return a[:-1]
    return a
