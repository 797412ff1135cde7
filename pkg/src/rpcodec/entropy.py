"""Coding tree and coefficient serialization.

Per node a split flag (absent at 8x8), per leaf a 6-bit mode followed by its
coefficient blocks. A block is ue(count) then, for every nonzero level in
up-right diagonal order, ue(zero run) ue(|level| - 1) and a sign bit.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .bitstream import BitReader, BitWriter, ue_length
from .core import (MAX_TU_SIZE, MIN_CU_SIZE, NUM_MODES, BitstreamError, CodingTree)

MODE_BITS = 6


@lru_cache(maxsize=None)
def diagonal_scan(size: int) -> np.ndarray:
    """Flat raster indices in up-right diagonal order."""
    order = []
    for d in range(2 * size - 1):
        for y in range(min(d, size - 1), -1, -1):
            x = d - y
            if x < size:
                order.append(y * size + x)
    out = np.array(order, dtype=np.int64)
    out.flags.writeable = False
    return out


def encode_coeffs(w: BitWriter, block) -> None:
    block = np.asarray(block)
    n = block.shape[0]
    scanned = block.reshape(-1)[diagonal_scan(n)]
    nz = np.flatnonzero(scanned)
    w.ue(len(nz))
    prev = -1
    for pos in nz.tolist():
        level = int(scanned[pos])
        w.ue(pos - prev - 1)
        w.ue(abs(level) - 1)
        w.write_bits(1 if level < 0 else 0, 1)
        prev = pos


def coeff_bits(block) -> int:
    """Number of bits ``encode_coeffs`` would write."""
    block = np.asarray(block)
    scanned = block.reshape(-1)[diagonal_scan(block.shape[0])]
    nz = np.flatnonzero(scanned)
    bits = ue_length(len(nz))
    prev = -1
    for pos in nz.tolist():
        bits += ue_length(pos - prev - 1) + ue_length(abs(int(scanned[pos])) - 1) + 1
        prev = pos
    return bits


def decode_coeffs(r: BitReader, size: int) -> np.ndarray:
    total = size * size
    count = r.ue()
    if count > total:
        raise BitstreamError(f"{count} nonzero coefficients declared for a {size}x{size} block")
    scanned = np.zeros(total, dtype=np.int32)
    pos = -1
    for _ in range(count):
        pos += r.ue() + 1
        if pos >= total:
            raise BitstreamError("coefficient run overflows the block")
        level = r.ue() + 1
        if level > 32767:
            raise BitstreamError("coefficient level out of range")
        scanned[pos] = -level if r.read_bits(1) else level
    block = np.zeros(total, dtype=np.int32)
    block[diagonal_scan(size)] = scanned
    return block.reshape(size, size)


def encode_tree(w: BitWriter, tree: CodingTree) -> None:
    """Depth-first serialization of one CTU."""
    if tree.size > MIN_CU_SIZE:
        w.write_bits(0 if tree.is_leaf else 1, 1)
    elif not tree.is_leaf:
        raise ValueError("8x8 CU cannot be split")
    if tree.is_leaf:
        w.write_bits(tree.mode, MODE_BITS)
        for b in tree.coeff_blocks:
            encode_coeffs(w, b)
    else:
        for child in tree.children:
            encode_tree(w, child)


def decode_tree(r: BitReader, x: int, y: int, size: int) -> CodingTree:
    """Parse one node. Coefficients are always parsed whatever the caller
    does with them afterwards."""
    if size > MIN_CU_SIZE and r.read_bits(1):
        half = size // 2
        children = tuple(decode_tree(r, x + dx, y + dy, half)
                         for dy in (0, half) for dx in (0, half))
        return CodingTree(x, y, size, children=children)
    mode = r.read_bits(MODE_BITS)
    if mode >= NUM_MODES:
        raise BitstreamError(f"intra mode {mode} out of range")
    tu = min(size, MAX_TU_SIZE)
    blocks = tuple(decode_coeffs(r, tu) for _ in range((size // tu) ** 2))
    return CodingTree(x, y, size, mode=mode, coeff_blocks=blocks)
