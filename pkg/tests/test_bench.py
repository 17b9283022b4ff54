import csv
import hashlib
import itertools
from pathlib import Path

import numpy as np
import pytest

from rltc.bench.external import ExternalToolMissing
from rltc.bench.ratio import REFERENCE_ROWS, ZeroCompressedSize, compression_ratio, reference_report
from rltc.bench.sweep import SWEEP_FIELDS, VerificationFailed, sweep_chunk_sizes, throughput, time_batch, verify_roundtrip, write_sweep_csv
from rltc.bench.table import TABLE_FIELDS, baseline_table, format_table, write_table_csv
from rltc.codec.pipeline import compress_bytes
from rltc.ingestion.corpus import CorpusSlice


def _slice(data: bytes) -> CorpusSlice:
    return CorpusSlice(Path("memory"), 0, len(data), hashlib.sha256(data).hexdigest(), data)


def _ticking_timer(step=0.5):
    counter = itertools.count()
    return lambda: next(counter) * step


def test_compression_ratio():
    assert compression_ratio(100, 50) == 2.0
    assert round(compression_ratio(100_000_000, 36_445_248), 1) == 2.7
    assert round(compression_ratio(100_000_000, 14_915_298), 1) == 6.7
    with pytest.raises(ZeroCompressedSize):
        compression_ratio(100, 0)


def test_reference_rows_flag_the_inconsistent_ratio():
    report = {row["program"]: row for row in reference_report()}
    assert len(report) == len(REFERENCE_ROWS)
    assert report["GZIP"]["consistent"]
    assert report["XZ"]["consistent"]
    assert report["NNCP"]["consistent"]

    published = report["RL token compressor (published)"]
    assert published["computed_ratio"] == "4.14"
    assert published["reported_ratio"] == "4.12"
    assert not published["consistent"]


def test_throughput():
    assert throughput(1000, 2.0) == 500.0
    assert throughput(1000, 0.0) == 0.0


def test_time_batch_reports_median_of_measured_calls():
    calls = []
    seconds = time_batch(lambda: calls.append(1), warmup=2, repeats=5, timer=_ticking_timer(0.25))
    assert len(calls) == 7
    assert seconds == pytest.approx(0.25)


def test_verify_roundtrip():
    verify_roundtrip(b"abc", b"abc", "same")
    with pytest.raises(VerificationFailed):
        verify_roundtrip(b"abc", b"abd", "different")


def test_sweep_chunk_sizes(codec_pair, tmp_path):
    comp, decomp = codec_pair
    corpus = _slice(b"sweep the chunk sizes of the learned codec " * 3)

    rows = sweep_chunk_sizes(comp, decomp, corpus, [8, 16], batch=4, timer=_ticking_timer())

    assert [row.chunk_size for row in rows] == [8, 16]
    for row in rows:
        assert row.compressed_bytes > 0
        assert row.ratio == pytest.approx(len(corpus.data) / row.compressed_bytes)
        assert row.latency_s == pytest.approx(0.5)
    # four full chunks per timed batch
    assert rows[0].throughput_tps == pytest.approx(32 / 0.5)
    assert rows[1].throughput_tps == pytest.approx(64 / 0.5)

    path = tmp_path / "sweep.csv"
    write_sweep_csv(rows, path)
    with path.open(newline="") as handle:
        written = list(csv.DictReader(handle))
    assert tuple(written[0]) == SWEEP_FIELDS
    assert [r["chunk_size"] for r in written] == ["8", "16"]
    assert written[0]["latency_s"] == "0.500000"


@pytest.mark.parametrize("sizes", [[0], [129], [8, 200]])
def test_sweep_rejects_sizes_out_of_range(codec_pair, sizes):
    with pytest.raises(ValueError):
        sweep_chunk_sizes(*codec_pair, _slice(b"abc"), sizes)


def test_sweep_rejects_empty_batch(codec_pair):
    with pytest.raises(ValueError):
        sweep_chunk_sizes(*codec_pair, _slice(b"abc"), [8], batch=0)


def _missing(name, data):
    raise ExternalToolMissing(f"{name} is not installed")


def _fake_gzip(name, data):
    return data[: len(data) // 3], data


def test_baseline_table_omits_missing_tools():
    corpus = _slice(b"to be or not to be, that is the question. " * 30)
    table = baseline_table(corpus, external=("gzip", "xz"), roundtrip=_missing)

    assert [row.program for row in table.rows] == ["LZ77 (fixed-width)", "Arithmetic (order-0)", "Range (order-0)"]
    assert table.notes == ["gzip: not installed, row omitted", "xz: not installed, row omitted"]
    assert table.row("gzip") is None
    assert all(row.verified and row.compressed_bytes < table.original_bytes for row in table.rows)


def test_baseline_table_includes_external_and_learned_rows(codec_pair):
    comp, decomp = codec_pair
    data = b"the learned codec must reproduce this text exactly. " * 4
    table = baseline_table(_slice(data), compressor=comp, decompressor=decomp, chunk_len=16, external=("gzip",), roundtrip=_fake_gzip)

    gzip_row = table.row("gzip")
    assert gzip_row.compressed_bytes == len(data) // 3
    learned = table.row("RL token compressor")
    ranged = table.row("RL token compressor + range")
    assert learned is not None and ranged is not None
    assert learned.ratio == pytest.approx(len(data) / learned.compressed_bytes)
    assert ranged.compressed_bytes > 0
    assert table.notes == []


def test_learned_rows_and_sweep_honor_length_cap(codec_pair):
    comp, decomp = codec_pair
    data = b"capped learned codec rows. " * 6
    expected = len(compress_bytes(comp, decomp, data, 16, max_compress_len=2))

    table = baseline_table(_slice(data), compressor=comp, decompressor=decomp, chunk_len=16, max_compress_len=2, external=())
    assert table.row("RL token compressor").compressed_bytes == expected

    (row,) = sweep_chunk_sizes(comp, decomp, _slice(data), [16], batch=2, max_compress_len=2, timer=_ticking_timer())
    assert row.compressed_bytes == expected


def test_baseline_table_rejects_a_lossy_external_tool():
    def lossy(name, data):
        return b"x", data[:-1]

    with pytest.raises(VerificationFailed):
        baseline_table(_slice(b"abcdefgh" * 8), external=("gzip",), roundtrip=lossy)


def test_table_csv_and_text(tmp_path):
    table = baseline_table(_slice(b"hello hello hello hello " * 10), external=("gzip",), roundtrip=_missing)

    path = tmp_path / "table.csv"
    write_table_csv(table, path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert tuple(rows[0]) == TABLE_FIELDS
    assert len(rows) == 1 + len(table.rows)
    assert all(r[3] == "true" for r in rows[1:])

    text = format_table(table)
    assert "LZ77 (fixed-width)" in text
    assert "note: gzip: not installed, row omitted" in text
    flagged = [line for line in text.splitlines() if "does not match" in line]
    assert len(flagged) == 1 and flagged[0].startswith("RL token compressor (published)")
    assert "published" not in format_table(table, include_reference=False)


@pytest.mark.slow
def test_sweep_on_a_quarter_megabyte(codec_pair):
    comp, decomp = codec_pair
    rng = np.random.default_rng(0)
    words = [b"alpha ", b"beta ", b"gamma ", b"delta ", b"<page>", b"</page>\n"]
    data = b"".join(words[i] for i in rng.integers(0, len(words), size=60_000))[: 256 * 1024]

    rows = sweep_chunk_sizes(comp, decomp, _slice(data), [16, 32, 64, 128], batch=16, jobs=2)

    assert [row.chunk_size for row in rows] == [16, 32, 64, 128]
    assert all(row.latency_s > 0 and row.throughput_tps > 0 for row in rows)
