"""Error-control codes and CRC framing for ciphertext frames."""

from __future__ import annotations

import zlib
from math import comb

import numpy as np

from . import kernels

CRC_BITS = 32


def as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit arrays may only hold 0 and 1")
    return arr


def crc32_bits(bits) -> np.ndarray:
    """CRC-32 of a bit string (zero-padded to whole bytes), as 32 bits MSB first."""
    b = as_bits(bits)
    crc = zlib.crc32(np.packbits(b).tobytes() + len(b).to_bytes(4, "big"))
    return np.unpackbits(np.array([crc], dtype=">u4").view(np.uint8))


def attach_crc(bits) -> np.ndarray:
    b = as_bits(bits)
    return np.concatenate([b, crc32_bits(b)])


def check_crc(payload) -> tuple[np.ndarray, bool]:
    """Split a CRC-framed payload and report whether the tag matches."""
    p = as_bits(payload)
    body, tag = p[:-CRC_BITS], p[-CRC_BITS:]
    return body, bool(np.array_equal(crc32_bits(body), tag))


class ErrorControlCode:
    """Interface for the forward error-control code applied to each frame."""

    @property
    def rate(self) -> float:
        raise NotImplementedError

    def encode(self, bits) -> np.ndarray:
        raise NotImplementedError

    def decode(self, bits) -> np.ndarray:
        raise NotImplementedError

    def codeword_length(self, k: int) -> int:
        raise NotImplementedError


class RepetitionCode(ErrorControlCode):
    """Repeat each bit ``n`` times (n odd); decode by majority vote."""

    def __init__(self, n: int = 3):
        if n < 1 or n % 2 == 0:
            raise ValueError(f"repetition length must be a positive odd integer, got {n}")
        self.n = int(n)

    def __repr__(self):
        return f"RepetitionCode(n={self.n})"

    @property
    def rate(self) -> float:
        return 1.0 / self.n

    def codeword_length(self, k: int) -> int:
        return k * self.n

    def encode(self, bits) -> np.ndarray:
        return np.repeat(as_bits(bits), self.n)

    def decode(self, bits) -> np.ndarray:
        return kernels.majority_vote(as_bits(bits), self.n)

    def bit_error_rate(self, p: float) -> float:
        """Probability that majority decoding of one bit is wrong on a BSC(p)."""
        n = self.n
        return sum(comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n // 2 + 1, n + 1))

    def frame_error_rate(self, k: int, p: float) -> float:
        return 1.0 - (1.0 - self.bit_error_rate(p)) ** k
