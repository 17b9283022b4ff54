"""
Byte-oriented range coder with carry propagation.

``low`` is kept one bit wider than the 32-bit ``range`` so an addition can carry
into bytes already decided; those bytes are held back (``cache`` plus a run of
0xFF bytes) until the carry is known. Everything in the coding loop is integer
arithmetic.
"""

from __future__ import annotations

import logging
from typing import List, Sequence

from rltc.baselines.bitio import CorruptBitstream
from rltc.baselines.frequency import DEFAULT_MAX_TOTAL, FrequencyModel

logger = logging.getLogger(__name__)

TOP = 1 << 24
RANGE_INIT = 0xFFFFFFFF
MASK32 = 0xFFFFFFFF
FLUSH_BYTES = 5
MAX_OVERRUN_BYTES = 4


class RangeEncoder:
    def __init__(self) -> None:
        self.low = 0
        self.range = RANGE_INIT
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def encode(self, cum_low: int, freq: int, total: int) -> None:
        r = self.range // total
        self.low += r * cum_low
        self.range = r * freq
        while self.range < TOP:
            self.range <<= 8
            self._shift_low()

    def _shift_low(self) -> None:
        if self.low < 0xFF000000 or self.low > MASK32:
            carry = self.low >> 32
            temp = self.cache
            while True:
                self.out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low << 8) & MASK32

    def finish(self) -> bytes:
        for _ in range(FLUSH_BYTES):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.position = 0
        self.overrun = 0
        self.range = RANGE_INIT
        self.code = 0
        self.r = 0
        for _ in range(FLUSH_BYTES):
            self.code = ((self.code << 8) | self._next_byte()) & MASK32

    def _next_byte(self) -> int:
        if self.position < len(self.data):
            byte = self.data[self.position]
            self.position += 1
            return byte
        self.overrun += 1
        if self.overrun > MAX_OVERRUN_BYTES:
            raise CorruptBitstream(f"read {self.overrun} bytes past the end of a {len(self.data)}-byte stream")
        return 0

    def decode_freq(self, total: int) -> int:
        self.r = self.range // total
        value = self.code // self.r
        if value >= total:
            raise CorruptBitstream(f"cumulative value {value} outside [0, {total})")
        return value

    def consume(self, cum_low: int, freq: int) -> None:
        self.code -= self.r * cum_low
        self.range = self.r * freq
        while self.range < TOP:
            self.code = ((self.code << 8) | self._next_byte()) & MASK32
            self.range <<= 8


def range_encode(symbols: bytes | Sequence[int], alphabet_size: int = 256) -> bytes:
    """Adaptive order-0 range coding of ``symbols`` followed by end-of-stream."""
    if alphabet_size < 1:
        raise ValueError("alphabet_size must be >= 1")
    model = FrequencyModel(alphabet_size, max_total=DEFAULT_MAX_TOTAL)
    encoder = RangeEncoder()
    for s in symbols:
        if not 0 <= s < alphabet_size:
            raise ValueError(f"symbol {s} outside alphabet of {alphabet_size}")
        low, high, total = model.interval(s)
        encoder.encode(low, high - low, total)
        model.update(s)
    low, high, total = model.interval(model.eos)
    encoder.encode(low, high - low, total)
    payload = encoder.finish()
    logger.debug("Range-coded %d symbols into %d bytes", len(symbols), len(payload))
    return payload


def range_decode_symbols(data: bytes, alphabet_size: int = 256) -> List[int]:
    """
    Inverse of :func:`range_encode` for any alphabet size.

    Raises:
        CorruptBitstream: the stream ends or leaves the valid code range before end-of-stream.
    """
    model = FrequencyModel(alphabet_size, max_total=DEFAULT_MAX_TOTAL)
    decoder = RangeDecoder(bytes(data))
    out: List[int] = []
    while True:
        value = decoder.decode_freq(model.total)
        symbol = model.symbol_for(value)
        low, high, _ = model.interval(symbol)
        decoder.consume(low, high - low)
        if symbol == model.eos:
            break
        out.append(symbol)
        model.update(symbol)
    return out


def range_decode(data: bytes, alphabet_size: int = 256) -> bytes:
    if alphabet_size > 256:
        raise ValueError("byte output needs alphabet_size <= 256; use range_decode_symbols")
    return bytes(range_decode_symbols(data, alphabet_size))
