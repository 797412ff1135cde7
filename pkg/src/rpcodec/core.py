"""Shared domain types: frames, codec configuration, coding trees and
reconstruction strategies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

PLANAR = 0
DC = 1
NUM_MODES = 35

CTU_LOG2 = 6
MIN_CU_LOG2 = 3
CTU_SIZE = 1 << CTU_LOG2
MIN_CU_SIZE = 1 << MIN_CU_LOG2
MAX_TU_SIZE = 32


class CodecError(Exception):
    """Base class for codec failures."""


class BitstreamError(CodecError):
    """Malformed, truncated or oversized stream."""


@dataclass(frozen=True)
class Frame:
    """8-bit grayscale sample plane, row-major."""

    width: int
    height: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if self.width > 0xFFFF or self.height > 0xFFFF:
            raise ValueError("frame dimensions exceed 65535")
        s = np.asarray(self.samples)
        if s.size != self.width * self.height:
            raise ValueError(
                f"sample count {s.size} does not match {self.width}x{self.height}")
        if s.dtype != np.uint8:
            if s.size and (s.min() < 0 or s.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            s = s.astype(np.uint8)
        s = np.ascontiguousarray(s.reshape(self.height, self.width))
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_array(cls, arr) -> "Frame":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D sample array")
        return cls(arr.shape[1], arr.shape[0], arr)

    @classmethod
    def filled(cls, width: int, height: int, value: int) -> "Frame":
        return cls(width, height, np.full((height, width), value, dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.samples, other.samples)

    __hash__ = None


@dataclass(frozen=True)
class CodecConfig:
    qp: int = 32
    loop_filter_enabled: bool = True
    ctu_log2: int = CTU_LOG2
    min_cu_log2: int = MIN_CU_LOG2

    def __post_init__(self):
        if not isinstance(self.qp, (int, np.integer)) or not 0 <= self.qp <= 51:
            raise ValueError(f"qp must be an integer in [0, 51], got {self.qp!r}")
        if self.ctu_log2 != CTU_LOG2 or self.min_cu_log2 != MIN_CU_LOG2:
            raise ValueError("only 64x64 CTUs with 8x8 minimum CUs are supported")


# Reconstruction strategies --------------------------------------------------

@dataclass(frozen=True)
class Standard:
    name = "standard"


@dataclass(frozen=True)
class ZeroResidual:
    name = "zero"


@dataclass(frozen=True)
class ConstantResidual:
    c: int
    name = "constant"

    def __post_init__(self):
        if not -255 <= int(self.c) <= 255:
            raise ValueError(f"constant residual must be in [-255, 255], got {self.c}")


@dataclass(frozen=True)
class RandomPerturbation:
    sigma: float = 7.0
    seed: int = 0
    name = "perturb"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


ReconstructionStrategy = Union[Standard, ZeroResidual, ConstantResidual, RandomPerturbation]


def parse_strategy(text: str, sigma: float = 7.0, seed: int = 0) -> ReconstructionStrategy:
    """Parse ``standard``, ``zero``, ``constant:<c>`` or ``perturb``."""
    text = text.strip().lower()
    if text == "standard":
        return Standard()
    if text == "zero":
        return ZeroResidual()
    if text == "perturb":
        return RandomPerturbation(sigma=sigma, seed=seed)
    if text.startswith("constant:"):
        try:
            c = int(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad constant in strategy {text!r}") from None
        return ConstantResidual(c)
    raise ValueError(f"unknown strategy {text!r}")


# Coding tree ----------------------------------------------------------------

@dataclass(frozen=True)
class CodingTree:
    """Quadtree node. Leaves carry a mode and coefficient blocks; split nodes
    carry four children in z-order (TL, TR, BL, BR)."""

    x: int
    y: int
    size: int
    children: Optional[tuple["CodingTree", ...]] = None
    mode: Optional[int] = None
    coeff_blocks: Optional[tuple[np.ndarray, ...]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.size not in (8, 16, 32, 64):
            raise ValueError(f"invalid CU size {self.size}")
        if self.children is not None:
            if len(self.children) != 4:
                raise ValueError("split node needs exactly four children")
            if self.mode is not None or self.coeff_blocks is not None:
                raise ValueError("split node cannot carry leaf data")
            half = self.size // 2
            for child, (dx, dy) in zip(self.children, ((0, 0), (half, 0), (0, half), (half, half))):
                if (child.x, child.y, child.size) != (self.x + dx, self.y + dy, half):
                    raise ValueError("child rectangle does not match quadrant")
        else:
            if self.mode is None or not 0 <= self.mode < NUM_MODES:
                raise ValueError(f"leaf needs an intra mode in [0, 34], got {self.mode}")
            if self.coeff_blocks is None:
                raise ValueError("leaf needs coefficient blocks")
            tu = min(self.size, MAX_TU_SIZE)
            expected = (self.size // tu) ** 2
            if len(self.coeff_blocks) != expected:
                raise ValueError(f"{self.size}x{self.size} leaf needs {expected} coefficient blocks")
            for b in self.coeff_blocks:
                if b.shape != (tu, tu):
                    raise ValueError(f"coefficient block shape {b.shape} != {(tu, tu)}")

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    def leaves(self) -> Iterator["CodingTree"]:
        if self.children is None:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def __eq__(self, other):
        if not isinstance(other, CodingTree):
            return NotImplemented
        if (self.x, self.y, self.size, self.mode) != (other.x, other.y, other.size, other.mode):
            return False
        if self.children is not None or other.children is not None:
            return self.children == other.children
        return len(self.coeff_blocks) == len(other.coeff_blocks) and all(
            np.array_equal(a, b) for a, b in zip(self.coeff_blocks, other.coeff_blocks))

    __hash__ = None


def leaf(x: int, y: int, size: int, mode: int, coeff_blocks=None) -> CodingTree:
    """Build a leaf; missing coefficient blocks default to zeros."""
    if coeff_blocks is None:
        tu = min(size, MAX_TU_SIZE)
        coeff_blocks = [np.zeros((tu, tu), dtype=np.int32) for _ in range((size // tu) ** 2)]
    return CodingTree(x, y, size, mode=mode,
                      coeff_blocks=tuple(np.asarray(b, dtype=np.int32) for b in coeff_blocks))


def split(x: int, y: int, size: int, children) -> CodingTree:
    return CodingTree(x, y, size, children=tuple(children))


def padded_dims(width: int, height: int) -> tuple[int, int]:
    """Round dimensions up to the next CTU multiple."""
    return -(-width // CTU_SIZE) * CTU_SIZE, -(-height // CTU_SIZE) * CTU_SIZE
