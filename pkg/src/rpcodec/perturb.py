"""Gaussian integer perturbation series used in place of decoded residuals.

Generator: numpy's PCG64 bit generator (stream fixed by seed) supplies raw
64-bit words; the top 53 bits of each word form a uniform double and pairs
of doubles go through the Box-Muller transform. Only the raw PCG64 stream
is relied upon, so a series is reproducible across numpy versions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SERIES_LENGTH = 64 * 64
MEAN_TOLERANCE = 0.1
STD_TOLERANCE = 0.1
MAX_ATTEMPTS = 1000
SIGMA_RANGE = (0.5, 64.0)


class PerturbationError(ValueError):
    """Requested statistics could not be met."""


@dataclass(frozen=True)
class RpSeries:
    values: np.ndarray = field(repr=False)
    sigma: float
    seed: int
    achieved_mean: float
    achieved_std: float
    attempts: int = 1
    mu: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int32)
        if v.shape != (SERIES_LENGTH,):
            raise ValueError(f"series must hold {SERIES_LENGTH} values, got {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return SERIES_LENGTH

    def block(self, size: int) -> np.ndarray:
        """First size*size values laid out row-major as a size x size block."""
        return self.values[: size * size].reshape(size, size)

    def dump(self, path) -> None:
        Path(path).write_text("".join(f"{int(v)}\n" for v in self.values))

    @classmethod
    def load(cls, path, sigma: float = float("nan"), seed: int = 0) -> "RpSeries":
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
        try:
            values = np.array([int(ln) for ln in lines], dtype=np.int32)
        except ValueError as e:
            raise ValueError(f"{path}: series file must hold one integer per line") from e
        return cls(values, sigma, seed, float(values.mean()), float(values.std()))


def _gaussian(gen: np.random.PCG64, count: int, sigma: float) -> np.ndarray:
    raw = gen.random_raw(count + (count & 1))
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(len(u))
    z[0::2] = radius * np.cos(2 * np.pi * u2)
    z[1::2] = radius * np.sin(2 * np.pi * u2)
    return sigma * z[:count]


def round_half_away(x: np.ndarray) -> np.ndarray:
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def generate_rp_series(sigma: float, seed: int = 0) -> RpSeries:
    """Draw 4096 rounded Normal(0, sigma) samples, redrawing the whole set
    until its mean and (population) std are within 0.1 of 0 and sigma."""
    if not SIGMA_RANGE[0] <= sigma <= SIGMA_RANGE[1]:
        raise ValueError(f"sigma must be in [{SIGMA_RANGE[0]}, {SIGMA_RANGE[1]}], got {sigma}")
    seed = int(seed)
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    gen = np.random.PCG64(seed)
    for attempt in range(1, MAX_ATTEMPTS + 1):
        values = round_half_away(_gaussian(gen, SERIES_LENGTH, sigma))
        mean = float(values.mean())
        std = float(values.std())
        if abs(mean) <= MEAN_TOLERANCE and abs(std - sigma) <= STD_TOLERANCE:
            return RpSeries(values, float(sigma), seed, mean, std, attempt)
    raise PerturbationError(
        f"no series with mean 0 and std {sigma} within tolerance after {MAX_ATTEMPTS} draws")
