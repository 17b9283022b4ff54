from __future__ import annotations


class CorruptBitstream(ValueError):
    pass


class BitWriter:
    """Accumulates bits most-significant-first into bytes; the last byte is zero-padded."""

    def __init__(self) -> None:
        self._buffer = bytearray()
        self._current = 0
        self._filled = 0
        self.n_bits = 0

    def write(self, bit: int) -> None:
        self._current = (self._current << 1) | (bit & 1)
        self._filled += 1
        self.n_bits += 1
        if self._filled == 8:
            self._buffer.append(self._current)
            self._current = 0
            self._filled = 0

    def write_bits(self, value: int, width: int) -> None:
        """Write the low ``width`` bits of ``value``, high bit first."""
        for shift in range(width - 1, -1, -1):
            self.write((value >> shift) & 1)

    def getvalue(self) -> bytes:
        if self._filled:
            return bytes(self._buffer) + bytes([self._current << (8 - self._filled)])
        return bytes(self._buffer)


class BitReader:
    """
    Reads bits written by :class:`BitWriter`.

    Past the end it yields zeros, counting how many were invented; ``max_overrun``
    bounds that count before :class:`CorruptBitstream` is raised.
    """

    def __init__(self, data: bytes, n_bits: int | None = None, max_overrun: int = 64):
        self._data = data
        self._limit = len(data) * 8 if n_bits is None else min(n_bits, len(data) * 8)
        self._position = 0
        self.overrun = 0
        self.max_overrun = max_overrun

    @property
    def position(self) -> int:
        return self._position

    def read(self) -> int:
        if self._position >= self._limit:
            self.overrun += 1
            if self.overrun > self.max_overrun:
                raise CorruptBitstream(f"read {self.overrun} bits past the end of a {self._limit}-bit stream")
            return 0
        byte = self._data[self._position >> 3]
        bit = (byte >> (7 - (self._position & 7))) & 1
        self._position += 1
        return bit

    def read_bits(self, width: int) -> int:
        value = 0
        for _ in range(width):
            value = (value << 1) | self.read()
        return value
