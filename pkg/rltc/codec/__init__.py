from rltc.codec.container import (
    BadMagic,
    ChunkRecord,
    CompressedContainer,
    ContainerError,
    CorruptContainer,
    MalformedRecord,
    SizeReport,
    VersionUnsupported,
    VocabMismatch,
    parse_container,
    serialize_container,
)
from rltc.codec.packing import PayloadTruncated, TokenOutOfRange, pack_tokens, unpack_tokens
from rltc.codec.pipeline import compress_chunk, compress_stream, decompress_chunk, decompress_stream

__all__ = [
    "BadMagic",
    "ChunkRecord",
    "CompressedContainer",
    "ContainerError",
    "CorruptContainer",
    "MalformedRecord",
    "PayloadTruncated",
    "SizeReport",
    "TokenOutOfRange",
    "VersionUnsupported",
    "VocabMismatch",
    "compress_chunk",
    "compress_stream",
    "decompress_chunk",
    "decompress_stream",
    "pack_tokens",
    "parse_container",
    "serialize_container",
    "unpack_tokens",
]
