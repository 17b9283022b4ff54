from __future__ import annotations

import bisect
from typing import List, Optional, Sequence, Tuple

import numpy as np

DEFAULT_MAX_TOTAL = 1 << 16


class FrequencyModel:
    """
    Order-0 symbol counts over ``alphabet_size`` symbols plus one end-of-stream symbol.

    Counts start at 1 so every symbol stays encodable. When the total passes
    ``max_total`` every count is halved (rounding up), keeping each one >= 1.
    """

    def __init__(
        self,
        alphabet_size: int = 256,
        *,
        max_total: int = DEFAULT_MAX_TOTAL,
        counts: Optional[Sequence[int]] = None,
    ):
        if alphabet_size < 1:
            raise ValueError("alphabet_size must be >= 1")
        self.alphabet_size = alphabet_size
        self.eos = alphabet_size
        self.max_total = max_total
        if counts is None:
            self.counts = np.ones(alphabet_size + 1, dtype=np.int64)
        else:
            self.counts = np.asarray(counts, dtype=np.int64).copy()
            if self.counts.shape != (alphabet_size + 1,):
                raise ValueError(f"expected {alphabet_size + 1} counts, got {self.counts.shape}")
            if (self.counts < 1).any():
                raise ValueError("every count must be >= 1")
        self._cumulative: Optional[List[int]] = None

    @classmethod
    def from_message(cls, symbols: Sequence[int], alphabet_size: int = 256) -> "FrequencyModel":
        """Static model of ``symbols``: occurrence counts plus one, EOS weight 1."""
        occurrences = np.bincount(np.asarray(symbols, dtype=np.int64), minlength=alphabet_size)[:alphabet_size]
        return cls.from_occurrences(occurrences, alphabet_size)

    @classmethod
    def from_occurrences(cls, occurrences: Sequence[int], alphabet_size: int = 256) -> "FrequencyModel":
        counts = np.ones(alphabet_size + 1, dtype=np.int64)
        counts[:alphabet_size] += np.asarray(occurrences, dtype=np.int64)
        return cls(alphabet_size, max_total=int(counts.sum()), counts=counts)

    @property
    def n_symbols(self) -> int:
        return self.alphabet_size + 1

    @property
    def cumulative(self) -> List[int]:
        """``[0, c0, c0+c1, ...]``, strictly increasing, last entry is the total."""
        if self._cumulative is None:
            self._cumulative = [0] + np.cumsum(self.counts).tolist()
        return self._cumulative

    @property
    def total(self) -> int:
        return self.cumulative[-1]

    def interval(self, symbol: int) -> Tuple[int, int, int]:
        """``(low, high, total)`` of ``symbol``'s slice of the cumulative range."""
        if not 0 <= symbol < self.n_symbols:
            raise ValueError(f"symbol {symbol} outside alphabet of {self.n_symbols}")
        cum = self.cumulative
        return cum[symbol], cum[symbol + 1], cum[-1]

    def symbol_for(self, value: int) -> int:
        """Symbol whose interval contains cumulative ``value`` (0 <= value < total)."""
        return bisect.bisect_right(self.cumulative, value) - 1

    def update(self, symbol: int) -> None:
        self.counts[symbol] += 1
        self._cumulative = None
        if int(self.counts.sum()) > self.max_total:
            self.rescale()

    def rescale(self) -> None:
        self.counts = (self.counts + 1) // 2
        self._cumulative = None
