"""
Greedy LZ77 with explicit literals.

Each step emits either a literal byte or a back-reference ``(offset, length)``
to the longest earlier match inside the window. Matches may run into the bytes
they are producing (offset < length), and equal-length candidates resolve to
the smallest offset.
"""

from __future__ import annotations

import logging
import struct
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from rltc.baselines.bitio import BitReader, BitWriter, CorruptBitstream

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 4096
DEFAULT_LOOKAHEAD = 64
SERIAL_MIN_MATCH = 3
SERIAL_MAX_CHAIN = 64
PARAMS = struct.Struct("<IH")


class DanglingOffset(ValueError):
    pass


@dataclass(frozen=True)
class Lz77Token:
    """Literal when ``offset == 0`` (``length`` is then 0), otherwise a back-reference."""

    offset: int = 0
    length: int = 0
    literal: Optional[int] = None

    @property
    def is_literal(self) -> bool:
        return self.offset == 0

    @classmethod
    def lit(cls, byte: int) -> "Lz77Token":
        return cls(0, 0, byte)

    @classmethod
    def match(cls, offset: int, length: int) -> "Lz77Token":
        return cls(offset, length, None)


def _match_length(data: bytes, candidate: int, position: int, limit: int) -> int:
    """Length of the common prefix of ``data[candidate:]`` and ``data[position:]``, capped at ``limit``."""
    lo, hi = 0, limit
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if data[candidate : candidate + mid] == data[position : position + mid]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def lz77_tokenize(
    data: bytes,
    window: int = DEFAULT_WINDOW,
    lookahead: int = DEFAULT_LOOKAHEAD,
    *,
    min_match: int = 1,
    max_chain: Optional[int] = None,
) -> List[Lz77Token]:
    """
    Parse ``data`` into literals and longest matches.

    Args:
        data: Input bytes.
        window: Largest allowed offset.
        lookahead: Largest allowed match length.
        min_match: Shortest match worth emitting; shorter ones become literals.
        max_chain: Candidate positions examined per step (None = all in the window).

    Returns:
        Tokens whose :func:`lz77_reconstruct` is ``data``.
    """
    if window < 1 or lookahead < 1:
        raise ValueError("window and lookahead must be >= 1")
    if min_match < 1:
        raise ValueError("min_match must be >= 1")
    data = bytes(data)
    n = len(data)
    key_len = min(min_match, 3)
    chains: Dict[bytes, List[int]] = defaultdict(list)

    def register(pos: int) -> None:
        if pos + key_len <= n:
            chains[data[pos : pos + key_len]].append(pos)

    tokens: List[Lz77Token] = []
    i = 0
    while i < n:
        best_len, best_off = 0, 0
        limit = min(lookahead, n - i)
        if limit >= min_match:
            candidates = chains.get(data[i : i + key_len], [])
            examined = 0
            for j in reversed(candidates):
                if i - j > window:
                    break
                length = _match_length(data, j, i, limit)
                if length > best_len:
                    best_len, best_off = length, i - j
                    if length == limit:
                        break
                examined += 1
                if max_chain is not None and examined >= max_chain:
                    break

        if best_len >= min_match:
            tokens.append(Lz77Token.match(best_off, best_len))
            step = best_len
        else:
            tokens.append(Lz77Token.lit(data[i]))
            step = 1
        for pos in range(i, i + step):
            register(pos)
        i += step
    return tokens


def lz77_reconstruct(tokens: Sequence[Lz77Token]) -> bytes:
    out = bytearray()
    for token in tokens:
        if token.is_literal:
            if token.literal is None or token.length != 0:
                raise ValueError(f"malformed literal token {token}")
            out.append(token.literal)
            continue
        if token.length < 1 or token.offset > len(out):
            raise DanglingOffset(f"offset {token.offset} reaches before the start of {len(out)} bytes")
        start = len(out) - token.offset
        for k in range(token.length):
            out.append(out[start + k])
    return bytes(out)


def _field_bits(max_value: int) -> int:
    return max(1, (max_value - 1).bit_length())


def lz77_serialize(tokens: Sequence[Lz77Token], window: int = DEFAULT_WINDOW, lookahead: int = DEFAULT_LOOKAHEAD) -> bytes:
    """
    Fixed-width bit layout: ``0`` + 8-bit literal, or ``1`` + (offset - 1) + (length - 1).

    The window and lookahead are stored up front so the reader knows the field widths.
    """
    offset_bits, length_bits = _field_bits(window), _field_bits(lookahead)
    writer = BitWriter()
    for token in tokens:
        if token.is_literal:
            writer.write(0)
            writer.write_bits(token.literal or 0, 8)
        else:
            writer.write(1)
            writer.write_bits(token.offset - 1, offset_bits)
            writer.write_bits(token.length - 1, length_bits)
    return PARAMS.pack(window, lookahead) + writer.getvalue()


def lz77_deserialize(payload: bytes, original_len: int) -> List[Lz77Token]:
    """Read tokens until they cover ``original_len`` bytes."""
    if len(payload) < PARAMS.size:
        raise CorruptBitstream("LZ77 payload shorter than its parameter block")
    window, lookahead = PARAMS.unpack_from(payload, 0)
    if window < 1 or lookahead < 1:
        raise CorruptBitstream("LZ77 window and lookahead must be >= 1")
    offset_bits, length_bits = _field_bits(window), _field_bits(lookahead)
    reader = BitReader(payload[PARAMS.size :], max_overrun=0)
    tokens: List[Lz77Token] = []
    covered = 0
    while covered < original_len:
        if reader.read():
            token = Lz77Token.match(reader.read_bits(offset_bits) + 1, reader.read_bits(length_bits) + 1)
            covered += token.length
        else:
            token = Lz77Token.lit(reader.read_bits(8))
            covered += 1
        tokens.append(token)
    if covered != original_len:
        raise CorruptBitstream(f"LZ77 tokens cover {covered} bytes, expected {original_len}")
    return tokens


def lz77_compress(data: bytes, window: int = DEFAULT_WINDOW, lookahead: int = DEFAULT_LOOKAHEAD) -> bytes:
    tokens = lz77_tokenize(data, window, lookahead, min_match=SERIAL_MIN_MATCH, max_chain=SERIAL_MAX_CHAIN)
    logger.debug("LZ77 parsed %d bytes into %d tokens", len(data), len(tokens))
    return lz77_serialize(tokens, window, lookahead)


def lz77_decompress(payload: bytes, original_len: int) -> bytes:
    data = lz77_reconstruct(lz77_deserialize(payload, original_len))
    if len(data) != original_len:
        raise CorruptBitstream(f"LZ77 stream decoded to {len(data)} bytes, expected {original_len}")
    return data
