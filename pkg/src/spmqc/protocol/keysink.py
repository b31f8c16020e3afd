from __future__ import annotations

from collections import deque

import numpy as np


class KeyExhausted(RuntimeError):
    pass


class KeySink:
    """FIFO store of distilled key bits, each tagged with the round that produced it."""

    def __init__(self):
        self._bits: deque[tuple[int, int]] = deque()
        self.consumed = 0

    def __len__(self):
        return len(self._bits)

    def __eq__(self, other):
        if not isinstance(other, KeySink):
            return NotImplemented
        return list(self._bits) == list(other._bits) and self.consumed == other.consumed

    def push(self, bits, round_index: int) -> None:
        self._bits.extend((int(b), round_index) for b in np.asarray(bits, dtype=np.uint8))

    def peek(self, n: int) -> np.ndarray:
        if n > len(self._bits):
            raise KeyExhausted(f"need {n} key bits, sink holds {len(self._bits)}")
        return np.fromiter((self._bits[i][0] for i in range(n)), dtype=np.uint8, count=n)

    def pop(self, n: int) -> np.ndarray:
        out = self.peek(n)
        for _ in range(n):
            self._bits.popleft()
        self.consumed += n
        return out

    def bits(self) -> np.ndarray:
        return np.fromiter((b for b, _ in self._bits), dtype=np.uint8, count=len(self._bits))

    def provenance(self) -> list[int]:
        return [r for _, r in self._bits]
