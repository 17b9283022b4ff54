"""
"RLTC" container layout.

Header (little-endian)::

    magic "RLTC" | version u8 | vocab u32 | chunk_len u16 | original_len u64 | n_chunks u32

followed by one record per chunk::

    n_tokens u16 | packed tokens | n_corrections u16 | (pos u16, token u16) * n_corrections
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from rltc.codec.packing import PayloadTruncated, TokenOutOfRange, pack_tokens, packed_size, unpack_tokens
from rltc.ingestion.tokenizer import MAX_CHUNK_LEN, VOCAB

logger = logging.getLogger(__name__)

MAGIC = b"RLTC"
VERSION = 1
HEADER = struct.Struct("<4sBIHQI")
U16 = struct.Struct("<H")
CORRECTION = struct.Struct("<HH")
RECORD_FRAMING_BYTES = 2 * U16.size


class ContainerError(ValueError):
    """Base class for every problem with a container's bytes."""


class BadMagic(ContainerError):
    pass


class VersionUnsupported(ContainerError):
    pass


class VocabMismatch(ContainerError):
    pass


class CorruptContainer(ContainerError):
    pass


class MalformedRecord(ContainerError):
    pass


@dataclass
class ChunkRecord:
    """Compressed form of one chunk: its compressed tokens and the positions greedy decoding gets wrong."""

    tokens: np.ndarray
    corrections: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def n_tokens(self) -> int:
        return int(len(self.tokens))

    @property
    def n_corrections(self) -> int:
        return len(self.corrections)

    def validate(self, valid_len: int, chunk_len: int, vocab: int) -> None:
        """Raise :class:`MalformedRecord` unless the record can describe a chunk of ``valid_len`` bytes."""
        if self.n_tokens > chunk_len:
            raise MalformedRecord(f"{self.n_tokens} compressed tokens exceed chunk_len {chunk_len}")
        tokens = np.asarray(self.tokens)
        if tokens.size and (tokens.min() < 0 or tokens.max() >= vocab):
            raise MalformedRecord(f"compressed token outside vocab of {vocab}")
        previous = -1
        for pos, token in self.corrections:
            if pos <= previous:
                raise MalformedRecord(f"correction positions not strictly increasing at {pos}")
            if pos >= valid_len:
                raise MalformedRecord(f"correction position {pos} outside chunk of {valid_len}")
            if not 0 <= token < VOCAB.n_bytes:
                raise MalformedRecord(f"correction token {token} is not a byte")
            previous = pos


@dataclass
class SizeReport:
    """
    Byte accounting of a serialized container.

    ``header_bytes`` counts the container header plus the two u16 length fields
    of every record, so the four parts add up to ``container_bytes``.
    """

    original_bytes: int
    container_bytes: int
    token_payload_bytes: int
    corrections_bytes: int
    header_bytes: int

    @property
    def ratio(self) -> float:
        return self.original_bytes / self.container_bytes if self.container_bytes else float("inf")


@dataclass
class CompressedContainer:
    vocab: int
    chunk_len: int
    original_len: int
    records: List[ChunkRecord] = field(default_factory=list)
    version: int = VERSION

    @property
    def n_chunks(self) -> int:
        return len(self.records)

    def valid_lengths(self) -> List[int]:
        return chunk_valid_lengths(self.original_len, self.chunk_len)

    def token_stream(self) -> np.ndarray:
        """All compressed tokens in chunk order."""
        if not self.records:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.asarray(r.tokens, dtype=np.int64) for r in self.records])

    def size_report(self) -> SizeReport:
        payload = sum(packed_size(r.n_tokens, self.vocab) for r in self.records)
        corrections = sum(CORRECTION.size * r.n_corrections for r in self.records)
        header = HEADER.size + RECORD_FRAMING_BYTES * len(self.records)
        return SizeReport(
            original_bytes=self.original_len,
            container_bytes=header + payload + corrections,
            token_payload_bytes=payload,
            corrections_bytes=corrections,
            header_bytes=header,
        )


def chunk_valid_lengths(original_len: int, chunk_len: int) -> List[int]:
    n_chunks = -(-original_len // chunk_len)
    return [min(chunk_len, original_len - i * chunk_len) for i in range(n_chunks)]


def serialize_container(container: CompressedContainer) -> bytes:
    parts = [
        HEADER.pack(
            MAGIC, container.version, container.vocab, container.chunk_len,
            container.original_len, container.n_chunks,
        )
    ]
    for record in container.records:
        parts.append(U16.pack(record.n_tokens))
        parts.append(pack_tokens(record.tokens, container.vocab))
        parts.append(U16.pack(record.n_corrections))
        parts.extend(CORRECTION.pack(pos, token) for pos, token in record.corrections)
    return b"".join(parts)


def parse_header(data: bytes) -> CompressedContainer:
    """Validate and decode the fixed header; records are left empty."""
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagic("not an RLTC container")
    if len(data) < HEADER.size:
        raise CorruptContainer(f"container truncated inside the {HEADER.size}-byte header")
    _, version, vocab, chunk_len, original_len, n_chunks = HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise VersionUnsupported(f"container version {version} is not supported (expected {VERSION})")
    if not 1 <= chunk_len <= MAX_CHUNK_LEN:
        raise CorruptContainer(f"chunk_len {chunk_len} outside 1..{MAX_CHUNK_LEN}")
    if vocab < 2:
        raise CorruptContainer(f"vocab {vocab} is too small")
    if n_chunks != -(-original_len // chunk_len):
        raise CorruptContainer(f"{n_chunks} chunks cannot hold {original_len} bytes at chunk_len {chunk_len}")
    return CompressedContainer(vocab=vocab, chunk_len=chunk_len, original_len=original_len, version=version)


def parse_container(data: bytes, expected_vocab: Optional[int] = None) -> CompressedContainer:
    """
    Decode a serialized container, validating every field.

    Args:
        data: Full container bytes.
        expected_vocab: Vocabulary of the model that will decode it, if known.

    Raises:
        BadMagic, VersionUnsupported, VocabMismatch, CorruptContainer
    """
    container = parse_header(data)
    if expected_vocab is not None and container.vocab != expected_vocab:
        raise VocabMismatch(f"container vocab {container.vocab} does not match model vocab {expected_vocab}")

    view = memoryview(data)
    cursor = HEADER.size
    records: List[ChunkRecord] = []
    try:
        for index, valid_len in enumerate(container.valid_lengths()):
            (n_tokens,) = U16.unpack_from(view, cursor)
            cursor += U16.size
            width = packed_size(n_tokens, container.vocab)
            if cursor + width > len(view):
                raise PayloadTruncated(f"record {index} truncated inside its token payload")
            tokens = unpack_tokens(bytes(view[cursor : cursor + width]), n_tokens, container.vocab)
            cursor += width
            (n_corrections,) = U16.unpack_from(view, cursor)
            cursor += U16.size
            corrections = [CORRECTION.unpack_from(view, cursor + k * CORRECTION.size) for k in range(n_corrections)]
            cursor += n_corrections * CORRECTION.size
            record = ChunkRecord(tokens=tokens, corrections=[(int(p), int(t)) for p, t in corrections])
            record.validate(valid_len, container.chunk_len, container.vocab)
            records.append(record)
    except (struct.error, PayloadTruncated, TokenOutOfRange, MalformedRecord) as exc:
        logger.error("Corrupt container at byte %d: %s", cursor, exc)
        raise CorruptContainer(f"corrupt record data at byte {cursor}: {exc}") from exc

    if cursor != len(view):
        raise CorruptContainer(f"{len(view) - cursor} trailing bytes after the last record")
    container.records = records
    return container

