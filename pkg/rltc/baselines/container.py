"""
"RLTB" file format for the classic baselines::

    magic "RLTB" | codec u8 | original_len u64 | payload
"""

from __future__ import annotations

import logging
import struct
from enum import IntEnum

from rltc.baselines.arithmetic import EncodedBits, ac_decode, ac_encode
from rltc.baselines.bitio import CorruptBitstream
from rltc.baselines.lz77 import lz77_compress, lz77_decompress
from rltc.baselines.range_coder import range_decode, range_encode

logger = logging.getLogger(__name__)

BASELINE_MAGIC = b"RLTB"
BASELINE_HEADER = struct.Struct("<4sBQ")
AC_BITS = struct.Struct("<Q")


class BaselineCodec(IntEnum):
    LZ77 = 1
    ARITHMETIC = 2
    RANGE = 3


class BaselineFormatError(ValueError):
    pass


def _encode_payload(codec: BaselineCodec, data: bytes) -> bytes:
    if codec is BaselineCodec.LZ77:
        return lz77_compress(data)
    if codec is BaselineCodec.ARITHMETIC:
        encoded = ac_encode(data)
        return AC_BITS.pack(encoded.n_bits) + encoded.data
    return range_encode(data)


def _decode_payload(codec: BaselineCodec, payload: bytes, original_len: int) -> bytes:
    if codec is BaselineCodec.LZ77:
        return lz77_decompress(payload, original_len)
    if codec is BaselineCodec.ARITHMETIC:
        if len(payload) < AC_BITS.size:
            raise CorruptBitstream("arithmetic payload is missing its bit count")
        (n_bits,) = AC_BITS.unpack_from(payload, 0)
        return ac_decode(EncodedBits(payload[AC_BITS.size :], int(n_bits)))
    return range_decode(payload)


def baseline_compress(data: bytes, codec: BaselineCodec | int) -> bytes:
    codec = BaselineCodec(codec)
    payload = _encode_payload(codec, bytes(data))
    logger.info("%s baseline: %d -> %d payload bytes", codec.name, len(data), len(payload))
    return BASELINE_HEADER.pack(BASELINE_MAGIC, int(codec), len(data)) + payload


def baseline_decompress(blob: bytes) -> bytes:
    """
    Decode an RLTB file.

    Raises:
        BaselineFormatError: wrong magic, unknown codec id or a short header.
        CorruptBitstream: the payload does not decode to ``original_len`` bytes.
    """
    if len(blob) < BASELINE_HEADER.size or blob[:4] != BASELINE_MAGIC:
        raise BaselineFormatError("not an RLTB baseline file")
    _, codec_id, original_len = BASELINE_HEADER.unpack_from(blob, 0)
    try:
        codec = BaselineCodec(codec_id)
    except ValueError as exc:
        raise BaselineFormatError(f"unknown baseline codec id {codec_id}") from exc
    data = _decode_payload(codec, blob[BASELINE_HEADER.size :], original_len)
    if len(data) != original_len:
        raise CorruptBitstream(f"{codec.name} payload decoded to {len(data)} bytes, header says {original_len}")
    return data
