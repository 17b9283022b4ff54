"""Compression ratio, latency and throughput of the learned codec across chunk sizes."""

from __future__ import annotations

import csv
import hashlib
import logging
import statistics
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from rltc.bench.ratio import compression_ratio
from rltc.codec.container import serialize_container
from rltc.codec.pipeline import compress_group, compress_stream, decompress_stream
from rltc.ingestion.corpus import CorpusSlice
from rltc.ingestion.tokenizer import MAX_CHUNK_LEN, chunk_stream, encode_bytes
from rltc.model.params import ModelParams
from rltc.utils.files import atomic_write

logger = logging.getLogger(__name__)

WARMUP_BATCHES = 2
MEASURED_BATCHES = 5


class VerificationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepRow:
    chunk_size: int
    compressed_bytes: int
    ratio: float
    latency_s: float
    throughput_tps: float


SWEEP_FIELDS = tuple(f.name for f in fields(SweepRow))


def throughput(tokens: int, seconds: float) -> float:
    """Tokens per second; 0 when no time was measured."""
    return tokens / seconds if seconds > 0 else 0.0


def verify_roundtrip(original: bytes, restored: bytes, label: str) -> None:
    if hashlib.sha256(original).digest() != hashlib.sha256(restored).digest():
        logger.error("%s round trip differs from the input (%d vs %d bytes)", label, len(original), len(restored))
        raise VerificationFailed(f"{label} did not reproduce its input")


def time_batch(
    fn: Callable[[], object],
    *,
    warmup: int = WARMUP_BATCHES,
    repeats: int = MEASURED_BATCHES,
    timer: Callable[[], float] = time.perf_counter,
) -> float:
    """Median wall time of ``repeats`` calls after ``warmup`` untimed ones."""
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        start = timer()
        fn()
        samples.append(timer() - start)
    return statistics.median(samples)


def sweep_chunk_sizes(
    compressor: ModelParams,
    decompressor: ModelParams,
    corpus: CorpusSlice,
    sizes: Sequence[int],
    batch: int = 16,
    *,
    jobs: int = 1,
    max_compress_len: Optional[int] = None,
    timer: Callable[[], float] = time.perf_counter,
) -> List[SweepRow]:
    """
    Measure the learned codec at each chunk size, in the order given.

    Args:
        compressor: Compressor network.
        decompressor: Decompressor network.
        corpus: Slice to compress.
        sizes: Chunk sizes (tokens), each in 1..128.
        batch: Chunks per timed batch; 1 gives single-chunk latency.
        jobs: Worker threads for the size measurement.
        max_compress_len: Cap on compressed tokens per chunk, clipped to each size.
        timer: Monotonic clock.

    Returns:
        One row per size. Sizes are verified by a full round trip; timing
        columns come from the first ``batch`` chunks of the slice.
    """
    for size in sizes:
        if not 1 <= size <= MAX_CHUNK_LEN:
            raise ValueError(f"chunk size {size} outside 1..{MAX_CHUNK_LEN}")
    if batch < 1:
        raise ValueError("batch must be >= 1")

    data = corpus.data
    rows: List[SweepRow] = []
    for size in sizes:
        container = compress_stream(compressor, decompressor, data, size, jobs=jobs, max_compress_len=max_compress_len)
        blob = serialize_container(container)
        verify_roundtrip(data, decompress_stream(decompressor, blob, jobs=jobs), f"chunk size {size}")

        chunks = chunk_stream(encode_bytes(data), size)[:batch]
        tokens = sum(c.valid_len for c in chunks)
        latency = time_batch(lambda: compress_group(compressor, decompressor, chunks, max_compress_len), timer=timer) if chunks else 0.0
        row = SweepRow(
            chunk_size=size,
            compressed_bytes=len(blob),
            ratio=compression_ratio(len(data), len(blob)),
            latency_s=latency,
            throughput_tps=throughput(tokens, latency),
        )
        logger.info(
            "chunk %d: %d bytes, ratio %.3f, %.4f s/batch, %.1f tok/s",
            size, row.compressed_bytes, row.ratio, row.latency_s, row.throughput_tps,
        )
        rows.append(row)
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    with atomic_write(path, mode="w") as handle:
        writer = csv.DictWriter(handle, fieldnames=SWEEP_FIELDS)
        writer.writeheader()
        for row in rows:
            values = asdict(row)
            values["ratio"] = f"{row.ratio:.4f}"
            values["latency_s"] = f"{row.latency_s:.6f}"
            values["throughput_tps"] = f"{row.throughput_tps:.2f}"
            writer.writerow(values)
    logger.info("Wrote %d sweep rows to %s", len(rows), path)
