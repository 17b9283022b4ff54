"""Table of verified compressed sizes for the classic baselines and the learned codec."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from rltc.baselines.container import BaselineCodec, baseline_compress, baseline_decompress
from rltc.baselines.range_coder import range_decode_symbols, range_encode
from rltc.bench.external import EXTERNAL_TOOLS, ExternalToolMissing, external_roundtrip
from rltc.bench.ratio import compression_ratio, reference_report
from rltc.bench.sweep import VerificationFailed, verify_roundtrip
from rltc.codec.container import serialize_container
from rltc.codec.pipeline import compress_stream, decompress_stream
from rltc.ingestion.corpus import CorpusSlice
from rltc.model.params import ModelParams
from rltc.utils.files import atomic_write

logger = logging.getLogger(__name__)

TABLE_FIELDS = ("program", "compressed_bytes", "ratio", "verified")


@dataclass(frozen=True)
class TableRow:
    program: str
    compressed_bytes: int
    ratio: float
    verified: bool = True


@dataclass
class BaselineTable:
    original_bytes: int
    rows: List[TableRow] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def row(self, program: str) -> Optional[TableRow]:
        return next((r for r in self.rows if r.program == program), None)


def _native_row(data: bytes, codec: BaselineCodec, program: str) -> TableRow:
    blob = baseline_compress(data, codec)
    verify_roundtrip(data, baseline_decompress(blob), program)
    return TableRow(program, len(blob), compression_ratio(len(data), len(blob)))


def _learned_rows(
    data: bytes,
    compressor: ModelParams,
    decompressor: ModelParams,
    chunk_len: int,
    jobs: int,
    max_compress_len: Optional[int] = None,
) -> List[TableRow]:
    container = compress_stream(compressor, decompressor, data, chunk_len, jobs=jobs, max_compress_len=max_compress_len)
    blob = serialize_container(container)
    verify_roundtrip(data, decompress_stream(decompressor, blob, jobs=jobs), "learned codec")
    rows = [TableRow("RL token compressor", len(blob), compression_ratio(len(data), len(blob)))]

    # entropy-code the compressed tokens instead of storing them at fixed width
    tokens = container.token_stream().tolist()
    coded = range_encode(tokens, alphabet_size=container.vocab)
    if range_decode_symbols(coded, alphabet_size=container.vocab) != tokens:
        raise VerificationFailed("range-coded token stream did not decode back")
    report = container.size_report()
    size = report.container_bytes - report.token_payload_bytes + len(coded)
    rows.append(TableRow("RL token compressor + range", size, compression_ratio(len(data), size)))
    return rows


def baseline_table(
    corpus: CorpusSlice,
    *,
    compressor: Optional[ModelParams] = None,
    decompressor: Optional[ModelParams] = None,
    chunk_len: int = 64,
    jobs: int = 1,
    max_compress_len: Optional[int] = None,
    external: Sequence[str] = tuple(EXTERNAL_TOOLS),
    roundtrip: Callable[[str, bytes], tuple] = external_roundtrip,
) -> BaselineTable:
    """
    Compress ``corpus`` with every available program and keep only verified rows.

    Args:
        corpus: Loaded slice.
        compressor: Learned compressor; the learned rows are skipped without it.
        decompressor: Learned decompressor.
        chunk_len: Chunk size for the learned codec.
        jobs: Worker threads for the learned codec.
        max_compress_len: Cap on compressed tokens per chunk for the learned codec.
        external: System tools to try.
        roundtrip: Runs one system tool; returns ``(compressed, restored)``.

    Returns:
        Rows in a fixed order plus notes for programs that were skipped.
    """
    data = corpus.data
    table = BaselineTable(original_bytes=len(data))
    table.rows.append(_native_row(data, BaselineCodec.LZ77, "LZ77 (fixed-width)"))
    table.rows.append(_native_row(data, BaselineCodec.ARITHMETIC, "Arithmetic (order-0)"))
    table.rows.append(_native_row(data, BaselineCodec.RANGE, "Range (order-0)"))

    for name in external:
        try:
            compressed, restored = roundtrip(name, data)
        except ExternalToolMissing as exc:
            logger.warning("Skipping %s row: %s", name, exc)
            table.notes.append(f"{name}: not installed, row omitted")
            continue
        verify_roundtrip(data, restored, name)
        table.rows.append(TableRow(name, len(compressed), compression_ratio(len(data), len(compressed))))

    if compressor is not None and decompressor is not None:
        table.rows.extend(_learned_rows(data, compressor, decompressor, chunk_len, jobs, max_compress_len))

    logger.info("Baseline table: %d verified rows, %d notes", len(table.rows), len(table.notes))
    return table


def write_table_csv(table: BaselineTable, path: str | Path) -> None:
    with atomic_write(path, mode="w") as handle:
        writer = csv.writer(handle)
        writer.writerow(TABLE_FIELDS)
        for row in table.rows:
            writer.writerow([row.program, row.compressed_bytes, f"{row.ratio:.2f}", str(row.verified).lower()])


def format_table(table: BaselineTable, include_reference: bool = True) -> str:
    lines = [f"{'Program':<32} {'Compressed Bytes':>16} {'Ratio':>7}"]
    lines.append(f"{'original':<32} {table.original_bytes:>16} {'1.00':>7}")
    for row in table.rows:
        lines.append(f"{row.program:<32} {row.compressed_bytes:>16} {row.ratio:>7.2f}")
    lines.extend(f"note: {note}" for note in table.notes)
    if include_reference:
        lines.append("")
        lines.append("published enwik8 results (computed vs reported ratio):")
        for ref in reference_report():
            flag = "" if ref["consistent"] else "  <- reported ratio does not match its byte count"
            lines.append(
                f"{ref['program']:<32} {ref['compressed_bytes']:>16} {ref['computed_ratio']:>7} "
                f"(reported {ref['reported_ratio']}){flag}"
            )
    return "\n".join(lines)
