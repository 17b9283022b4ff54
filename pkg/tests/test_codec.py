from pathlib import Path

import numpy as np
import pytest

from rltc.codec.container import (
    HEADER,
    BadMagic,
    ChunkRecord,
    CompressedContainer,
    CorruptContainer,
    MalformedRecord,
    VersionUnsupported,
    VocabMismatch,
    parse_container,
    serialize_container,
)
from rltc.codec.packing import PayloadTruncated, TokenOutOfRange, bits_per_token, pack_tokens, packed_size, unpack_tokens
from rltc.codec.pipeline import (
    compress_bytes,
    compress_chunk,
    compress_stream,
    decompress_chunk,
    decompress_stream,
    greedy_compress,
)
from rltc.ingestion.tokenizer import chunk_stream, encode_bytes
from rltc.model.params import ModelParams

FIXTURES = Path(__file__).parent / "fixtures"


def _container():
    return CompressedContainer(
        vocab=260,
        chunk_len=4,
        original_len=6,
        records=[
            ChunkRecord(tokens=np.array([1, 2, 3]), corrections=[(0, 104), (3, 33)]),
            ChunkRecord(tokens=np.array([], dtype=np.int64), corrections=[(1, 10)]),
        ],
    )


def test_bits_per_token():
    assert bits_per_token(260) == 9
    assert bits_per_token(256) == 8
    assert bits_per_token(2) == 1
    assert packed_size(3, 260) == 4


def test_pack_tokens_golden_bytes():
    assert pack_tokens([1, 2, 3], 260) == bytes([0x00, 0x80, 0x80, 0x60])
    assert unpack_tokens(bytes([0x00, 0x80, 0x80, 0x60]), 3, 260).tolist() == [1, 2, 3]
    assert pack_tokens([], 260) == b""


def test_pack_tokens_rejects_out_of_range():
    with pytest.raises(TokenOutOfRange):
        pack_tokens([260], 260)
    with pytest.raises(TokenOutOfRange):
        unpack_tokens(b"\xff\xff", 1, 260)


def test_pack_unpack_fuzz():
    rng = np.random.default_rng(8)
    for _ in range(10_000):
        vocab = int(rng.integers(2, 70_001))
        tokens = rng.integers(0, vocab, size=int(rng.integers(0, 129)))
        payload = pack_tokens(tokens, vocab)
        assert len(payload) == packed_size(tokens.size, vocab)
        assert unpack_tokens(payload, tokens.size, vocab).tolist() == tokens.tolist()


def test_unpack_tokens_length_checks():
    with pytest.raises(PayloadTruncated):
        unpack_tokens(b"\x00", 2, 260)
    with pytest.raises(ValueError):
        unpack_tokens(b"\x00\x00\x00", 1, 260)


def test_container_round_trip_and_size_report():
    container = _container()
    blob = serialize_container(container)
    parsed = parse_container(blob, expected_vocab=260)

    assert parsed.chunk_len == 4
    assert parsed.original_len == 6
    assert [r.tokens.tolist() for r in parsed.records] == [[1, 2, 3], []]
    assert [r.corrections for r in parsed.records] == [[(0, 104), (3, 33)], [(1, 10)]]

    report = container.size_report()
    assert report.container_bytes == len(blob)
    assert report.header_bytes == HEADER.size + 2 * 4
    assert report.token_payload_bytes == 4
    assert report.corrections_bytes == 12
    assert report.header_bytes + report.token_payload_bytes + report.corrections_bytes == len(blob)


def test_parse_container_errors():
    blob = serialize_container(_container())
    with pytest.raises(BadMagic):
        parse_container(b"garbage that is not a container")
    with pytest.raises(VersionUnsupported):
        parse_container(blob[:4] + b"\x02" + blob[5:])
    with pytest.raises(VocabMismatch):
        parse_container(blob, expected_vocab=300)
    with pytest.raises(CorruptContainer):
        parse_container(blob[:-1])
    with pytest.raises(CorruptContainer):
        parse_container(blob + b"\x00")
    with pytest.raises(CorruptContainer):
        parse_container(blob[:10])


def test_parse_container_rejects_bad_corrections():
    container = _container()
    container.records[1] = ChunkRecord(tokens=np.array([], dtype=np.int64), corrections=[(2, 10)])
    with pytest.raises(CorruptContainer):
        parse_container(serialize_container(container))


def test_record_validation():
    record = ChunkRecord(tokens=np.array([1]), corrections=[(1, 5), (0, 6)])
    with pytest.raises(MalformedRecord):
        record.validate(valid_len=4, chunk_len=4, vocab=260)
    with pytest.raises(MalformedRecord):
        ChunkRecord(tokens=np.arange(5)).validate(valid_len=4, chunk_len=4, vocab=260)
    with pytest.raises(MalformedRecord):
        ChunkRecord(tokens=np.array([1]), corrections=[(0, 300)]).validate(4, 4, 260)


def test_golden_container_decompresses(codec_pair):
    _, decomp = codec_pair
    blob = (FIXTURES / "golden_full_corrections.rltc").read_bytes()
    assert decompress_stream(decomp, blob) == b"hi!"


def test_empty_input_gives_minimal_container(codec_pair):
    comp, decomp = codec_pair
    blob = compress_bytes(comp, decomp, b"", 64)
    assert len(blob) == HEADER.size
    assert blob[:4] == b"RLTC"
    assert decompress_stream(decomp, blob) == b""


@pytest.mark.parametrize(
    "data,chunk_len",
    [
        (b"a", 1),
        (b"hello, world", 5),
        (bytes(range(256)), 16),
        (b"\x00" * 100, 32),
        (b"abcabcabcabd" * 40, 128),
    ],
)
def test_stream_round_trip(codec_pair, data, chunk_len):
    comp, decomp = codec_pair
    container = compress_stream(comp, decomp, data, chunk_len)
    assert container.n_chunks == len(chunk_stream(encode_bytes(data), chunk_len))
    assert decompress_stream(decomp, serialize_container(container)) == data
    assert decompress_stream(decomp, container) == data


def test_compression_is_deterministic_and_independent_of_jobs(codec_pair):
    comp, decomp = codec_pair
    data = bytes(np.random.default_rng(0).integers(0, 256, size=3000).astype(np.uint8))
    first = compress_bytes(comp, decomp, data, 8)
    assert compress_bytes(comp, decomp, data, 8) == first
    assert compress_bytes(comp, decomp, data, 8, jobs=3) == first
    assert decompress_stream(decomp, first, jobs=3) == data


def test_compress_chunk_round_trip(codec_pair):
    comp, decomp = codec_pair
    for chunk in chunk_stream(encode_bytes(b"single chunk api!"), 8):
        record, report = compress_chunk(comp, decomp, chunk)
        assert report.container_bytes == 4 + report.token_payload_bytes + report.corrections_bytes
        restored = decompress_chunk(decomp, record, 8, chunk.valid_len)
        assert restored.payload.tolist() == chunk.payload.tolist()


def test_greedy_compress_stops_at_length_cap(codec_pair):
    comp, _ = codec_pair
    chunks = chunk_stream(encode_bytes(b"capped compressed sequences" * 3), 16)
    full = greedy_compress(comp, chunks)
    capped = greedy_compress(comp, chunks, max_len=2)
    for short, long in zip(capped, full):
        assert short.tolist() == long[:2].tolist()
    assert greedy_compress(comp, chunks, max_len=64)[0].tolist() == full[0].tolist()
    with pytest.raises(ValueError):
        greedy_compress(comp, chunks, max_len=0)


def test_stream_round_trip_with_length_cap(codec_pair):
    comp, decomp = codec_pair
    data = b"a length cap shortens every record. " * 12
    container = compress_stream(comp, decomp, data, 16, max_compress_len=3)
    assert all(record.n_tokens <= 3 for record in container.records)
    assert decompress_stream(decomp, serialize_container(container)) == data
    assert compress_bytes(comp, decomp, data, 16, max_compress_len=3) == serialize_container(container)


def test_vocab_mismatch_is_rejected(codec_pair, codec_config):
    comp, decomp = codec_pair
    other = ModelParams.initialize(codec_config.model_copy(update={"vocab": 261}), seed=0)
    with pytest.raises(VocabMismatch):
        compress_stream(comp, other, b"abc", 4)
    blob = compress_bytes(comp, decomp, b"abc", 4)
    with pytest.raises(VocabMismatch):
        decompress_stream(other, blob)


def _fuzz_inputs(rng, count):
    for i in range(count):
        n = int(rng.integers(0, 4097))
        kind = i % 3
        if kind == 0:
            yield bytes(rng.integers(0, 256, size=n).astype(np.uint8))
        elif kind == 1:
            period = int(rng.integers(1, 9))
            yield (bytes(rng.integers(0, 256, size=period).astype(np.uint8)) * (n // period + 1))[:n]
        else:
            yield bytes(rng.choice([0x00, 0xFF, 0x0A], size=n).astype(np.uint8))


def test_round_trip_fuzz_small(codec_pair):
    comp, decomp = codec_pair
    rng = np.random.default_rng(42)
    for data in _fuzz_inputs(rng, 12):
        n = len(data)
        data = data[: min(n, 300)]
        assert decompress_stream(decomp, compress_bytes(comp, decomp, data, 16)) == data


@pytest.mark.slow
def test_round_trip_fuzz(codec_pair):
    comp, decomp = codec_pair
    rng = np.random.default_rng(2024)
    for data in _fuzz_inputs(rng, 1000):
        chunk_len = int(rng.integers(1, 129))
        assert decompress_stream(decomp, compress_bytes(comp, decomp, data, chunk_len)) == data
