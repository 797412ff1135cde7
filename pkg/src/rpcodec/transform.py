"""Integer DCT/DST and scalar quantization for 8-bit video.

Bases are fixed-point: the DCT rows are round(64 * 2**EXTRA_BITS * sqrt(2) *
cos(...)) and the 4x4 luma transform uses the DST-VII basis at the same
scale. Shifting a basis right by EXTRA_BITS gives (within 1) the familiar
64-scaled HEVC integer matrices; the extra precision keeps the unquantized
round trip within one sample.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

BIT_DEPTH = 8
SUPPORTED_SIZES = (4, 8, 16, 32)
EXTRA_BITS = 6

QUANT_SCALE = (26214, 23302, 20560, 18396, 16384, 14564)
DEQUANT_SCALE = (40, 45, 51, 57, 64, 72)

COEFF_MIN, COEFF_MAX = -32768, 32767


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


@lru_cache(maxsize=None)
def basis(size: int, dst: bool = False) -> np.ndarray:
    """Integer transform matrix, rows are basis functions."""
    if size not in SUPPORTED_SIZES:
        raise ValueError(f"unsupported transform size {size}")
    scale = 64 << EXTRA_BITS
    k = np.arange(size)[:, None]
    n = np.arange(size)[None, :]
    if dst:
        if size != 4:
            raise ValueError("DST is only defined for 4x4 blocks")
        m = 2 * scale * np.sqrt(size) / np.sqrt(2 * size + 1) * np.sin(np.pi * (2 * k + 1) * (n + 1) / (2 * size + 1))
    else:
        m = scale * np.sqrt(2) * np.cos(np.pi * (2 * n + 1) * k / (2 * size))
        m[0, :] = scale
    m = _round_half_away(m)
    m.flags.writeable = False
    return m


def _check(block: np.ndarray) -> int:
    n = block.shape[0]
    if block.ndim != 2 or block.shape[1] != n or n not in SUPPORTED_SIZES:
        raise ValueError(f"unsupported block shape {block.shape}")
    return n


def _round_shift(x: np.ndarray, shift: int) -> np.ndarray:
    return (x + (1 << (shift - 1))) >> shift


def forward_transform(residual) -> np.ndarray:
    """2-D forward transform of an NxN residual block (DST for N=4)."""
    x = np.asarray(residual, dtype=np.int64)
    n = _check(x)
    m = basis(n, dst=(n == 4))
    log2 = n.bit_length() - 1
    # the first pass keeps the basis' extra precision; one rounding at the end
    tmp = _round_shift(x @ m.T, log2 + BIT_DEPTH - 9)
    return _round_shift(m @ tmp, log2 + 6 + 2 * EXTRA_BITS)


def inverse_transform(coeffs) -> np.ndarray:
    """2-D inverse transform; output clipped to [-255, 255]."""
    c = np.asarray(coeffs, dtype=np.int64)
    n = _check(c)
    m = basis(n, dst=(n == 4))
    tmp = np.clip(_round_shift(m.T @ c, 7 + EXTRA_BITS), COEFF_MIN, COEFF_MAX)
    res = _round_shift(tmp @ m, 20 - BIT_DEPTH + EXTRA_BITS)
    return np.clip(res, -255, 255)


def _check_qp(qp: int) -> None:
    if not 0 <= qp <= 51:
        raise ValueError(f"qp must be in [0, 51], got {qp}")


def quantize(coeffs, qp: int) -> np.ndarray:
    """Dead-zone scalar quantizer with a 1/3 step rounding offset (intra)."""
    _check_qp(qp)
    c = np.asarray(coeffs, dtype=np.int64)
    n = _check(c)
    log2 = n.bit_length() - 1
    qbits = 14 + qp // 6 + (15 - BIT_DEPTH - log2)
    offset = 171 << (qbits - 9)
    level = (np.abs(c) * QUANT_SCALE[qp % 6] + offset) >> qbits
    level = np.minimum(level, COEFF_MAX)
    return (np.sign(c) * level).astype(np.int32)


def dequantize(levels, qp: int) -> np.ndarray:
    _check_qp(qp)
    lv = np.asarray(levels, dtype=np.int64)
    n = _check(lv)
    log2 = n.bit_length() - 1
    shift = BIT_DEPTH + log2 - 5
    scale = (16 * DEQUANT_SCALE[qp % 6]) << (qp // 6)
    return np.clip(_round_shift(lv * scale, shift), COEFF_MIN, COEFF_MAX)


def quant_step(size: int, qp: int) -> float:
    """Reconstruction step in transform-coefficient units."""
    log2 = size.bit_length() - 1
    return 16 * DEQUANT_SCALE[qp % 6] * 2 ** (qp // 6) / 2 ** (BIT_DEPTH + log2 - 5)
