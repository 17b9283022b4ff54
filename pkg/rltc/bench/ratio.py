from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import List


class ZeroCompressedSize(ValueError):
    pass


def compression_ratio(original_bytes: int, compressed_bytes: int) -> float:
    """``original / compressed``; tables show it to two decimals."""
    if compressed_bytes < 1:
        raise ZeroCompressedSize(f"compressed size must be >= 1, got {compressed_bytes}")
    return original_bytes / compressed_bytes


ENWIK8_BYTES = 100_000_000


@dataclass(frozen=True)
class ReferenceRow:
    """A published enwik8 result: byte count plus the ratio as it was printed."""

    program: str
    compressed_bytes: int
    reported_ratio: str
    original_bytes: int = ENWIK8_BYTES

    @property
    def computed_ratio(self) -> float:
        return compression_ratio(self.original_bytes, self.compressed_bytes)

    @property
    def rounded_ratio(self) -> float:
        """The computed ratio rounded to as many decimals as the reported one."""
        decimals = -Decimal(self.reported_ratio).as_tuple().exponent
        return round(self.computed_ratio, int(decimals))

    @property
    def consistent(self) -> bool:
        return self.rounded_ratio == float(self.reported_ratio)


REFERENCE_ROWS: List[ReferenceRow] = [
    ReferenceRow("NNCP", 14_915_298, "6.7"),
    ReferenceRow("RL token compressor (published)", 24_141_013, "4.12"),
    ReferenceRow("XZ", 24_865_244, "4.0"),
    ReferenceRow("GZIP", 36_445_248, "2.7"),
]


def reference_report() -> List[dict]:
    """One dict per published row with computed vs reported ratio and a consistency flag."""
    return [
        {
            "program": row.program,
            "compressed_bytes": row.compressed_bytes,
            "computed_ratio": f"{row.computed_ratio:.2f}",
            "reported_ratio": row.reported_ratio,
            "consistent": row.consistent,
        }
        for row in REFERENCE_ROWS
    ]
