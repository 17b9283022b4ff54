from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MAX_CHUNK_LEN = 128


class SpecialTokenInPayload(ValueError):
    pass


class ZeroChunkSize(ValueError):
    pass


@dataclass(frozen=True)
class Vocab:
    """Byte-level vocabulary: ids 0..255 are the bytes themselves, specials follow."""

    size: int = 260
    pad: int = 256
    bos: int = 257
    eos: int = 258
    stop: int = 259

    @property
    def n_bytes(self) -> int:
        return 256

    @property
    def specials(self) -> tuple[int, ...]:
        return (self.pad, self.bos, self.eos, self.stop)

    def is_special(self, token_id: int) -> bool:
        return token_id >= self.n_bytes


VOCAB = Vocab()
PAD = VOCAB.pad
BOS = VOCAB.bos
EOS = VOCAB.eos
STOP = VOCAB.stop

TokenSequence = np.ndarray  # 1-D int64 array of ids in [0, VOCAB.size)


@dataclass
class Chunk:
    """
    A fixed-length group of tokens compressed independently.

    ``tokens`` always has exactly ``len(tokens)`` entries; positions at or past
    ``valid_len`` hold PAD.
    """

    tokens: np.ndarray
    valid_len: int
    index: int = 0

    @property
    def size(self) -> int:
        return int(self.tokens.shape[0])

    @property
    def payload(self) -> np.ndarray:
        return self.tokens[: self.valid_len]


def encode_bytes(data: bytes | bytearray | memoryview) -> TokenSequence:
    """Map each byte to its own token id."""
    return np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64)


def decode_tokens(seq: Sequence[int] | np.ndarray) -> bytes:
    """Inverse of :func:`encode_bytes`; special ids must already be stripped."""
    tokens = np.asarray(seq, dtype=np.int64)
    if tokens.size == 0:
        return b""
    if tokens.min() < 0 or tokens.max() >= VOCAB.n_bytes:
        bad = int(tokens[(tokens < 0) | (tokens >= VOCAB.n_bytes)][0])
        raise SpecialTokenInPayload(f"token id {bad} is not a byte")
    return tokens.astype(np.uint8).tobytes()


def chunk_stream(seq: Sequence[int] | np.ndarray, chunk_len: int) -> List[Chunk]:
    """
    Split a token sequence into ``ceil(len/chunk_len)`` PAD-filled chunks.

    Args:
        seq: Token ids.
        chunk_len: Tokens per chunk, 1..128.

    Returns:
        Chunks in stream order; the last one is PAD-filled past its ``valid_len``.
    """
    if chunk_len < 1:
        raise ZeroChunkSize(f"chunk size must be >= 1, got {chunk_len}")
    if chunk_len > MAX_CHUNK_LEN:
        raise ValueError(f"chunk size must be <= {MAX_CHUNK_LEN}, got {chunk_len}")

    tokens = np.asarray(seq, dtype=np.int64)
    n_chunks = -(-tokens.size // chunk_len)
    padded = np.full(n_chunks * chunk_len, PAD, dtype=np.int64)
    padded[: tokens.size] = tokens
    rows = padded.reshape(n_chunks, chunk_len)

    chunks: List[Chunk] = []
    for i in range(n_chunks):
        valid = min(chunk_len, tokens.size - i * chunk_len)
        chunks.append(Chunk(tokens=rows[i].copy(), valid_len=valid, index=i))

    logger.debug("Chunked %d tokens into %d chunks of %d", tokens.size, n_chunks, chunk_len)
    return chunks


def unchunk(chunks: Sequence[Chunk]) -> TokenSequence:
    """Concatenate the valid region of each chunk."""
    if not chunks:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([chunk.payload for chunk in chunks])


def stack_chunks(chunks: Sequence[Chunk]) -> tuple[np.ndarray, np.ndarray]:
    """Stack chunks of equal size into ``(tokens[B, S], valid_len[B])``."""
    tokens = np.stack([chunk.tokens for chunk in chunks]).astype(np.int64)
    valid = np.array([chunk.valid_len for chunk in chunks], dtype=np.int64)
    return tokens, valid
