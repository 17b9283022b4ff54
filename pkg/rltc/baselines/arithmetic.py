"""
Binary arithmetic coding over an order-0 frequency model.

The coder keeps ``low``/``high`` in 32-bit registers, emits a bit whenever both
share their top bit and defers bits while the interval straddles the midpoint
(underflow). Messages end with the model's end-of-stream symbol.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

from rltc.baselines.bitio import BitReader, BitWriter, CorruptBitstream
from rltc.baselines.frequency import FrequencyModel

logger = logging.getLogger(__name__)

STATE_BITS = 32
COUNT_BITS = 32


@dataclass(frozen=True)
class EncodedBits:
    """Coder output: padded bytes plus the exact number of meaningful bits."""

    data: bytes
    n_bits: int

    def __len__(self) -> int:
        return len(self.data)


class _CoderBase:
    def __init__(self, num_bits: int = STATE_BITS):
        self.num_bits = num_bits
        self.full_range = 1 << num_bits
        self.half_range = self.full_range >> 1
        self.quarter_range = self.half_range >> 1
        self.maximum_total = self.quarter_range + 2
        self.state_mask = self.full_range - 1
        self.low = 0
        self.high = self.state_mask

    def update(self, model: FrequencyModel, symbol: int) -> None:
        sym_low, sym_high, total = model.interval(symbol)
        if total > self.maximum_total:
            raise ValueError(f"model total {total} exceeds coder limit {self.maximum_total}")
        span = self.high - self.low + 1
        self.high = self.low + sym_high * span // total - 1
        self.low = self.low + sym_low * span // total

        while ((self.low ^ self.high) & self.half_range) == 0:
            self.shift()
            self.low = (self.low << 1) & self.state_mask
            self.high = ((self.high << 1) & self.state_mask) | 1
        while (self.low & ~self.high & self.quarter_range) != 0:
            self.underflow()
            self.low = (self.low << 1) ^ self.half_range
            self.high = ((self.high ^ self.half_range) << 1) | self.half_range | 1

    def shift(self) -> None:
        raise NotImplementedError

    def underflow(self) -> None:
        raise NotImplementedError


class ArithmeticEncoder(_CoderBase):
    def __init__(self, writer: BitWriter, num_bits: int = STATE_BITS):
        super().__init__(num_bits)
        self.writer = writer
        self.pending = 0

    def write(self, model: FrequencyModel, symbol: int) -> None:
        self.update(model, symbol)

    def finish(self) -> None:
        # one 1-bit selects a value inside the final interval
        self.writer.write(1)

    def shift(self) -> None:
        bit = self.low >> (self.num_bits - 1)
        self.writer.write(bit)
        for _ in range(self.pending):
            self.writer.write(bit ^ 1)
        self.pending = 0

    def underflow(self) -> None:
        self.pending += 1


class ArithmeticDecoder(_CoderBase):
    def __init__(self, reader: BitReader, num_bits: int = STATE_BITS):
        super().__init__(num_bits)
        self.reader = reader
        self.code = reader.read_bits(num_bits)

    def read(self, model: FrequencyModel) -> int:
        total = model.total
        span = self.high - self.low + 1
        value = ((self.code - self.low + 1) * total - 1) // span
        if not 0 <= value < total:
            raise CorruptBitstream(f"cumulative value {value} outside [0, {total})")
        symbol = model.symbol_for(value)
        self.update(model, symbol)
        if not self.low <= self.code <= self.high:
            raise CorruptBitstream("code register left the coding interval")
        return symbol

    def shift(self) -> None:
        self.code = ((self.code << 1) & self.state_mask) | self.reader.read()

    def underflow(self) -> None:
        self.code = (self.code & self.half_range) | ((self.code << 1) & (self.state_mask >> 1)) | self.reader.read()


def _as_symbols(symbols: bytes | Sequence[int], alphabet_size: int) -> List[int]:
    if not 1 <= alphabet_size <= 256:
        raise ValueError("alphabet_size must be in 1..256")
    values = list(symbols)
    for s in values:
        if not 0 <= s < alphabet_size:
            raise ValueError(f"symbol {s} outside alphabet of {alphabet_size}")
    return values


def ac_encode(symbols: bytes | Sequence[int], adaptive: bool = True, alphabet_size: int = 256) -> EncodedBits:
    """
    Arithmetic-code ``symbols`` followed by end-of-stream.

    Args:
        symbols: Values in ``[0, alphabet_size)``.
        adaptive: Update counts after every symbol. When False, occurrence
            counts are measured up front and stored (32 bits each) ahead of
            the code bits.
        alphabet_size: Size of the symbol alphabet (at most 256).

    Returns:
        The bitstream and its exact length in bits.
    """
    values = _as_symbols(symbols, alphabet_size)
    writer = BitWriter()
    if adaptive:
        model = FrequencyModel(alphabet_size)
    else:
        model = FrequencyModel.from_message(values, alphabet_size)
        for count in model.counts[:alphabet_size]:
            writer.write_bits(int(count) - 1, COUNT_BITS)

    encoder = ArithmeticEncoder(writer)
    for s in values:
        encoder.write(model, s)
        if adaptive:
            model.update(s)
    encoder.write(model, model.eos)
    encoder.finish()
    logger.debug("Arithmetic-coded %d symbols into %d bits", len(values), writer.n_bits)
    return EncodedBits(writer.getvalue(), writer.n_bits)


def ac_decode(encoded: EncodedBits | bytes, adaptive: bool = True, alphabet_size: int = 256) -> bytes:
    """
    Inverse of :func:`ac_encode` with the same flags.

    Raises:
        CorruptBitstream: the stream runs out, or decodes outside the coding interval,
            before end-of-stream is reached.
    """
    if isinstance(encoded, EncodedBits):
        reader = BitReader(encoded.data, encoded.n_bits, max_overrun=2 * STATE_BITS)
    else:
        reader = BitReader(bytes(encoded), max_overrun=2 * STATE_BITS)
    if adaptive:
        model = FrequencyModel(alphabet_size)
    else:
        occurrences = [reader.read_bits(COUNT_BITS) for _ in range(alphabet_size)]
        if reader.overrun:
            raise CorruptBitstream("stream ends inside the frequency table")
        model = FrequencyModel.from_occurrences(occurrences, alphabet_size)

    decoder = ArithmeticDecoder(reader)
    out = bytearray()
    while True:
        symbol = decoder.read(model)
        if symbol == model.eos:
            break
        out.append(symbol)
        if adaptive:
            model.update(symbol)
    return bytes(out)
