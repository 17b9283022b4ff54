"""
Lossless compression with a trained compressor/decompressor pair.

Each chunk is compressed greedily into a short token sequence; the decompressor
then decodes it greedily and every position it gets wrong is stored as a
correction. The compress side runs exactly the decoding routine the decompress
side will run, on the same fixed groups of chunks, so the corrections always
line up with what the decompressor reproduces.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from rltc.codec.container import (
    CORRECTION,
    RECORD_FRAMING_BYTES,
    ChunkRecord,
    CompressedContainer,
    CorruptContainer,
    SizeReport,
    VocabMismatch,
    parse_container,
    serialize_container,
)
from rltc.codec.packing import packed_size
from rltc.ingestion.tokenizer import BOS, PAD, STOP, VOCAB, Chunk, chunk_stream, decode_tokens, encode_bytes, stack_chunks
from rltc.model.framing import decompressor_encoder_inputs
from rltc.model.params import ModelParams
from rltc.model.sampling import greedy_tokens
from rltc.model.transformer import IncrementalDecoder, forward_encoder
from rltc.utils.parallel import map_ordered

logger = logging.getLogger(__name__)

# Chunks decoded together; both sides of the codec must use the same grouping.
DECODE_GROUP = 16


def greedy_compress(
    compressor: ModelParams,
    chunks: Sequence[Chunk],
    max_len: Optional[int] = None,
) -> List[np.ndarray]:
    """
    Argmax decoding from BOS until STOP or the length cap; STOP is not returned.

    The cap is ``min(max_len, chunk_len)``, or ``chunk_len`` when ``max_len`` is None,
    the same limit training rollouts stop at.
    """
    if max_len is not None and max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    ids, valid = stack_chunks(chunks)
    cap = ids.shape[1] if max_len is None else min(max_len, ids.shape[1])
    decoder = IncrementalDecoder(compressor, forward_encoder(compressor, ids, valid), valid)
    outputs: List[List[int]] = [[] for _ in chunks]
    active = np.ones(len(chunks), dtype=bool)
    feed = np.full(len(chunks), BOS, dtype=np.int64)
    for _ in range(cap):
        logits, _ = decoder.step(feed)
        feed = greedy_tokens(logits)
        for b in np.flatnonzero(active):
            if feed[b] == STOP:
                active[b] = False
            else:
                outputs[b].append(int(feed[b]))
        if not active.any():
            break
    return [np.array(out, dtype=np.int64) for out in outputs]


def greedy_reconstruct(
    decompressor: ModelParams,
    compressed: Sequence[np.ndarray],
    chunk_len: int,
    valid_lens: Sequence[int],
) -> np.ndarray:
    """
    Free-running greedy decode of each compressed sequence, restricted to byte ids.

    Returns:
        (B, chunk_len) predictions; columns past ``max(valid_lens)`` hold PAD.
    """
    enc_ids, enc_valid = decompressor_encoder_inputs(compressed, chunk_len)
    decoder = IncrementalDecoder(decompressor, forward_encoder(decompressor, enc_ids, enc_valid), enc_valid)
    out = np.full((len(compressed), chunk_len), PAD, dtype=np.int64)
    feed = np.full(len(compressed), BOS, dtype=np.int64)
    for t in range(max(valid_lens, default=0)):
        logits, _ = decoder.step(feed)
        feed = greedy_tokens(logits, limit=VOCAB.n_bytes)
        out[:, t] = feed
    return out


def _corrections(predicted: np.ndarray, chunk: Chunk) -> List[Tuple[int, int]]:
    truth = chunk.payload
    wrong = np.flatnonzero(predicted[: chunk.valid_len] != truth)
    return [(int(pos), int(truth[pos])) for pos in wrong]


def compress_group(
    compressor: ModelParams,
    decompressor: ModelParams,
    chunks: Sequence[Chunk],
    max_compress_len: Optional[int] = None,
) -> List[ChunkRecord]:
    if not chunks:
        return []
    compressed = greedy_compress(compressor, chunks, max_compress_len)
    predicted = greedy_reconstruct(decompressor, compressed, chunks[0].size, [c.valid_len for c in chunks])
    return [
        ChunkRecord(tokens=tokens, corrections=_corrections(row, chunk))
        for tokens, row, chunk in zip(compressed, predicted, chunks)
    ]


def decompress_group(
    decompressor: ModelParams,
    records: Sequence[ChunkRecord],
    chunk_len: int,
    valid_lens: Sequence[int],
) -> List[np.ndarray]:
    """Greedy decode plus corrections; returns each chunk's valid tokens."""
    if not records:
        return []
    predicted = greedy_reconstruct(decompressor, [r.tokens for r in records], chunk_len, valid_lens)
    chunks = []
    for row, record, valid_len in zip(predicted, records, valid_lens):
        tokens = row[:valid_len].copy()
        for pos, token in record.corrections:
            tokens[pos] = token
        chunks.append(tokens)
    return chunks


def record_size(record: ChunkRecord, vocab: int, original_bytes: int) -> SizeReport:
    """Byte accounting of one serialized record (its two u16 length fields count as header)."""
    payload = packed_size(record.n_tokens, vocab)
    corrections = CORRECTION.size * record.n_corrections
    return SizeReport(
        original_bytes=original_bytes,
        container_bytes=RECORD_FRAMING_BYTES + payload + corrections,
        token_payload_bytes=payload,
        corrections_bytes=corrections,
        header_bytes=RECORD_FRAMING_BYTES,
    )


def compress_chunk(
    compressor: ModelParams,
    decompressor: ModelParams,
    chunk: Chunk,
    max_compress_len: Optional[int] = None,
) -> Tuple[ChunkRecord, SizeReport]:
    """Compress a single chunk; the record decodes with :func:`decompress_chunk`."""
    _check_vocab(compressor, decompressor)
    (record,) = compress_group(compressor, decompressor, [chunk], max_compress_len)
    return record, record_size(record, decompressor.config.vocab, chunk.valid_len)


def decompress_chunk(
    decompressor: ModelParams,
    record: ChunkRecord,
    chunk_len: int,
    valid_len: Optional[int] = None,
) -> Chunk:
    """
    Rebuild one chunk from its record.

    Raises:
        MalformedRecord: too many tokens, ids outside the vocabulary, or bad corrections.
    """
    valid_len = chunk_len if valid_len is None else valid_len
    record.validate(valid_len, chunk_len, decompressor.config.vocab)
    (payload,) = decompress_group(decompressor, [record], chunk_len, [valid_len])
    tokens = np.full(chunk_len, PAD, dtype=np.int64)
    tokens[:valid_len] = payload
    return Chunk(tokens=tokens, valid_len=valid_len)


def _check_vocab(compressor: ModelParams, decompressor: ModelParams) -> None:
    if compressor.config.vocab != decompressor.config.vocab:
        raise VocabMismatch(
            f"compressor vocab {compressor.config.vocab} != decompressor vocab {decompressor.config.vocab}"
        )


def _groups(items: Sequence, size: int = DECODE_GROUP) -> List[Sequence]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def compress_stream(
    compressor: ModelParams,
    decompressor: ModelParams,
    data: bytes,
    chunk_len: int,
    *,
    jobs: int = 1,
    max_compress_len: Optional[int] = None,
) -> CompressedContainer:
    """
    Compress ``data`` chunk by chunk into a container.

    Args:
        compressor: Compressor network.
        decompressor: Decompressor network; must share the compressor's vocabulary.
        data: Bytes to compress (may be empty).
        chunk_len: Tokens per chunk, 1..128.
        jobs: Worker threads; groups of chunks are independent.
        max_compress_len: Cap on compressed tokens per chunk (None: ``chunk_len``).

    Returns:
        Container with one record per chunk, in chunk order.
    """
    _check_vocab(compressor, decompressor)
    chunks = chunk_stream(encode_bytes(data), chunk_len)
    groups = _groups(chunks)
    logger.info("Compressing %d bytes as %d chunks of %d (%d groups, %d jobs)", len(data), len(chunks), chunk_len, len(groups), jobs)

    results = map_ordered(lambda group: compress_group(compressor, decompressor, group, max_compress_len), groups, jobs=jobs)
    container = CompressedContainer(
        vocab=decompressor.config.vocab,
        chunk_len=chunk_len,
        original_len=len(data),
        records=[record for group in results for record in group],
    )
    report = container.size_report()
    logger.info(
        "Container: %d bytes (tokens %d, corrections %d, header %d), ratio %.3f",
        report.container_bytes, report.token_payload_bytes, report.corrections_bytes,
        report.header_bytes, report.ratio,
    )
    return container


def decompress_stream(
    decompressor: ModelParams,
    container: bytes | CompressedContainer,
    *,
    jobs: int = 1,
) -> bytes:
    """
    Rebuild the original bytes of a container.

    Raises:
        BadMagic, VersionUnsupported, VocabMismatch, CorruptContainer
    """
    vocab = decompressor.config.vocab
    if isinstance(container, (bytes, bytearray, memoryview)):
        container = parse_container(bytes(container), expected_vocab=vocab)
    elif container.vocab != vocab:
        raise VocabMismatch(f"container vocab {container.vocab} does not match model vocab {vocab}")

    valid_lens = container.valid_lengths()
    if len(valid_lens) != container.n_chunks:
        raise CorruptContainer(f"container holds {container.n_chunks} records, expected {len(valid_lens)}")
    for record, valid_len in zip(container.records, valid_lens):
        record.validate(valid_len, container.chunk_len, vocab)

    jobs_list = list(zip(_groups(container.records), _groups(valid_lens)))
    results = map_ordered(
        lambda job: decompress_group(decompressor, job[0], container.chunk_len, job[1]),
        jobs_list,
        jobs=jobs,
    )
    pieces = [tokens for group in results for tokens in group]
    data = decode_tokens(np.concatenate(pieces)) if pieces else b""
    if len(data) != container.original_len:
        raise CorruptContainer(f"decoded {len(data)} bytes, header says {container.original_len}")
    logger.info("Decompressed %d chunks into %d bytes", container.n_chunks, len(data))
    return data


def compress_bytes(
    compressor: ModelParams,
    decompressor: ModelParams,
    data: bytes,
    chunk_len: int,
    *,
    jobs: int = 1,
    max_compress_len: Optional[int] = None,
) -> bytes:
    return serialize_container(
        compress_stream(compressor, decompressor, data, chunk_len, jobs=jobs, max_compress_len=max_compress_len)
    )
