"""Mixed-radix flat indexing of product spaces.

Convention used throughout the package: little-endian, i.e. the first
coordinate varies fastest.  ``encode((c0, c1, ...)) = c0 + r0*c1 + r0*r1*c2 + ...``
"""
from __future__ import annotations

from typing import Sequence

import numpy as np


class MixedRadixIndex:
    def __init__(self, radices: Sequence[int]):
        radices = tuple(int(r) for r in radices)
        if any(r < 1 for r in radices):
            raise ValueError(f"radices must be >= 1, got {radices}")
        self.radices = radices
        strides = [1]
        for r in radices[:-1]:
            strides.append(strides[-1] * r)
        self.strides = tuple(strides)
        self.size = int(np.prod(radices, dtype=np.int64)) if radices else 1

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"MixedRadixIndex({self.radices})"

    def encode(self, coords: Sequence[int]) -> int:
        if len(coords) != len(self.radices):
            raise ValueError(f"expected {len(self.radices)} coordinates, got {len(coords)}")
        k = 0
        for c, r, st in zip(coords, self.radices, self.strides):
            if not 0 <= c < r:
                raise ValueError(f"coordinate {c} out of range for radix {r}")
            k += int(c) * st
        return k

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} out of range [0, {self.size})")
        out = []
        for r in self.radices:
            index, c = divmod(index, r)
            out.append(c)
        return tuple(out)

    def all_coords(self) -> np.ndarray:
        """Array of shape (size, len(radices)); row k is decode(k)."""
        k = np.arange(self.size, dtype=np.int64)
        cols = [(k // st) % r for r, st in zip(self.radices, self.strides)]
        if not cols:
            return np.zeros((self.size, 0), dtype=np.int64)
        return np.stack(cols, axis=1)

    def encode_array(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised encode over the rows of an integer array."""
        coords = np.asarray(coords, dtype=np.int64)
        return coords @ np.asarray(self.strides, dtype=np.int64)


def mixed_radix_encode(radices: Sequence[int], coords: Sequence[int]) -> int:
    return MixedRadixIndex(radices).encode(coords)


def mixed_radix_decode(radices: Sequence[int], index: int) -> tuple[int, ...]:
    return MixedRadixIndex(radices).decode(index)
