"""Intra encoder, strategy-driven decoder, deblocking and the HVS1 container."""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from . import intra
from .bitstream import BitReader, BitWriter
from .core import (CTU_SIZE, MAX_TU_SIZE, MIN_CU_SIZE, NUM_MODES, BitstreamError,
                   CodecConfig, CodingTree, ConstantResidual, Frame, RandomPerturbation,
                   Standard, ZeroResidual, padded_dims)
from .entropy import MODE_BITS, coeff_bits, decode_tree, encode_tree
from .perturb import RpSeries, generate_rp_series
from .transform import dequantize, forward_transform, inverse_transform, quantize

MAGIC = b"HVS1"
_HEADER = struct.Struct("<4sHHBBBB")
HEADER_SIZE = _HEADER.size
FLAG_LOOP_FILTER = 0x01

# deblocking thresholds indexed by Q
BETA_TABLE = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
    16, 17, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 44, 46, 48, 50, 52, 54,
    56, 58, 60, 62, 64,
]
TC_TABLE = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2,
    2, 2, 3, 3, 3, 3, 4, 4, 4, 5, 5, 6, 6, 7, 8, 9, 10, 11, 13, 14, 16, 18, 20, 22, 24,
]
BOUNDARY_STRENGTH = 2


# ---------------------------------------------------------------------------
# container

@dataclass(frozen=True)
class EncodedImage:
    width: int
    height: int
    qp: int
    loop_filter: bool
    payload: bytes = field(repr=False)
    ctu_log2: int = 6

    def to_bytes(self) -> bytes:
        flags = FLAG_LOOP_FILTER if self.loop_filter else 0
        return _HEADER.pack(MAGIC, self.width, self.height, self.qp, self.ctu_log2, flags, 0) \
            + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodedImage":
        if len(data) < HEADER_SIZE:
            raise BitstreamError("container shorter than its header")
        magic, width, height, qp, ctu_log2, flags, _ = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise BitstreamError(f"bad magic {magic!r}")
        if width == 0 or height == 0:
            raise BitstreamError("zero frame dimension in header")
        if qp > 51:
            raise BitstreamError(f"qp {qp} out of range in header")
        if ctu_log2 != 6:
            raise BitstreamError(f"unsupported CTU size 2^{ctu_log2}")
        if flags & ~FLAG_LOOP_FILTER:
            raise BitstreamError(f"unknown header flags {flags:#x}")
        return cls(width, height, qp, bool(flags & FLAG_LOOP_FILTER), bytes(data[HEADER_SIZE:]))

    @property
    def config(self) -> CodecConfig:
        return CodecConfig(qp=self.qp, loop_filter_enabled=self.loop_filter)

    @property
    def size_bytes(self) -> int:
        return HEADER_SIZE + len(self.payload)


# ---------------------------------------------------------------------------
# timing

@dataclass
class StageTimings:
    """Exclusive per-stage durations in seconds."""

    ed: float = 0.0
    ip: float = 0.0
    rd: float = 0.0
    lf: float = 0.0
    wall: float = 0.0

    STAGES = ("ed", "ip", "rd", "lf")

    def as_ms(self) -> dict:
        return {f"{k}_ms": 1000.0 * getattr(self, k) for k in (*self.STAGES, "wall")}


# ---------------------------------------------------------------------------
# reconstruction

def _tu_blocks(size: int):
    tu = min(size, MAX_TU_SIZE)
    return tu, [(dy, dx) for dy in range(0, size, tu) for dx in range(0, size, tu)]


def residual_from_coeffs(coeff_blocks, size: int, qp: int) -> np.ndarray:
    tu, offsets = _tu_blocks(size)
    if len(coeff_blocks) == 1:
        return inverse_transform(dequantize(coeff_blocks[0], qp))
    res = np.empty((size, size), dtype=np.int64)
    for (dy, dx), block in zip(offsets, coeff_blocks):
        res[dy:dy + tu, dx:dx + tu] = inverse_transform(dequantize(block, qp))
    return res


def reconstruct_cu(pred, coeffs, strategy, rp: Optional[RpSeries] = None,
                   qp: Optional[int] = None) -> np.ndarray:
    """Combine a prediction with a (real or substituted) residual.

    ``coeffs`` is the CU's list of coefficient blocks and is required only for
    Standard; ``rp`` only for RandomPerturbation. The series restarts at
    index 0 for every CU.
    """
    pred = np.asarray(pred)
    n = pred.shape[0]
    if isinstance(strategy, Standard):
        if coeffs is None or qp is None:
            raise ValueError("standard reconstruction needs coefficients and qp")
        return np.clip(pred + residual_from_coeffs(coeffs, n, qp), 0, 255)
    if isinstance(strategy, ZeroResidual):
        return pred.copy()
    if isinstance(strategy, ConstantResidual):
        return np.clip(pred + int(strategy.c), 0, 255)
    if isinstance(strategy, RandomPerturbation):
        if rp is None:
            raise ValueError("random perturbation needs an Rp series")
        if n * n > len(rp.values):
            raise ValueError(f"series too short for a {n}x{n} CU")
        return np.clip(pred + rp.values[: n * n].reshape(n, n), 0, 255)
    raise TypeError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# deblocking

def edge_maps(trees, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """CU boundaries on the 8x8 grid of a padded frame.

    ``vert[by, bx]`` marks the left edge of 8x8 block (bx, by) as a CU edge,
    ``horz[by, bx]`` its top edge. Frame borders are never marked.
    """
    vert = np.zeros((height // 8, width // 8), dtype=bool)
    horz = np.zeros_like(vert)
    for tree in trees:
        for lf in tree.leaves():
            bx, by, nb = lf.x // 8, lf.y // 8, lf.size // 8
            if bx > 0:
                vert[by:by + nb, bx] = True
            if by > 0:
                horz[by, bx:bx + nb] = True
    return vert, horz


def beta_tc(qp: int, bs: int = BOUNDARY_STRENGTH) -> tuple[int, int]:
    beta = BETA_TABLE[max(0, min(51, qp))]
    tc = TC_TABLE[max(0, min(53, qp + 2 * (bs - 1)))]
    return beta, tc


def _filter_lines(p2, p1, p0, q0, q1, q2, beta, tc):
    d = np.abs(p2 - 2 * p1 + p0) + np.abs(q2 - 2 * q1 + q0)
    delta = (9 * (q0 - p0) - 3 * (q1 - p1) + 8) >> 4
    # |delta| >= 10*tc means a natural edge, left alone
    on = (d < beta) & (np.abs(delta) < 10 * tc)
    delta = np.where(on, np.clip(delta, -tc, tc), 0)
    return np.clip(p0 + delta, 0, 255), np.clip(q0 - delta, 0, 255)


def _deblock_vertical(a: np.ndarray, vert: np.ndarray, beta: int, tc: int) -> None:
    by, bx = np.nonzero(vert)
    if not len(by):
        return
    rows = (by[:, None] * 8 + np.arange(8)[None, :]).ravel()
    cols = np.repeat(bx * 8, 8)
    g = [a[rows, cols + k] for k in (-3, -2, -1, 0, 1, 2)]
    p0, q0 = _filter_lines(g[0], g[1], g[2], g[3], g[4], g[5], beta, tc)
    a[rows, cols - 1] = p0
    a[rows, cols] = q0


def deblock(frame, edges, qp: int):
    """Normal luma deblocking across CU edges, vertical edges first.

    ``edges`` is the ``(vert, horz)`` pair from :func:`edge_maps`. Accepts a
    Frame (returns a Frame) or a 2-D array (returns an array).
    """
    is_frame = isinstance(frame, Frame)
    a = (frame.samples if is_frame else np.asarray(frame)).astype(np.int32)
    vert, horz = edges
    if vert.shape != (a.shape[0] // 8, a.shape[1] // 8) or horz.shape != vert.shape:
        raise ValueError("edge maps do not match frame dimensions")
    beta, tc = beta_tc(qp)
    if tc and beta:
        _deblock_vertical(a, vert, beta, tc)
        at = np.ascontiguousarray(a.T)
        _deblock_vertical(at, horz.T, beta, tc)
        a = at.T
    out = a.astype(np.uint8)
    return Frame.from_array(out) if is_frame else out


# ---------------------------------------------------------------------------
# encoder

class EncodeResult(NamedTuple):
    encoded: EncodedImage
    recon: Frame
    stats: dict


def rd_lambda(qp: int) -> float:
    return 0.85 * 2.0 ** ((qp - 12) / 3.0)


_H8 = np.array([[1]], dtype=np.int64)
for _ in range(3):
    _H8 = np.block([[_H8, _H8], [_H8, -_H8]])


def satd(diff: np.ndarray) -> np.ndarray:
    """Sum of absolute 8x8 Hadamard coefficients over the trailing two axes."""
    n = diff.shape[-1]
    lead = diff.shape[:-2]
    t = diff.reshape(*lead, n // 8, 8, n // 8, 8).swapaxes(-3, -2)
    h = _H8 @ t @ _H8
    return np.abs(h).sum(axis=(-4, -3, -2, -1))


def pad_frame(frame: Frame) -> np.ndarray:
    pw, ph = padded_dims(frame.width, frame.height)
    return np.pad(frame.samples, ((0, ph - frame.height), (0, pw - frame.width)), mode="edge")


class _Encoder:
    def __init__(self, src: np.ndarray, qp: int):
        self.src = src.astype(np.int64)
        self.qp = qp
        self.lam = rd_lambda(qp)
        self.recon = np.zeros(src.shape, dtype=np.uint8)

    def leaf(self, x, y, size):
        orig = self.src[y:y + size, x:x + size]
        refs = intra.gather_reference_samples(self.recon, x, y, size)
        preds = intra.predict_all_modes(refs, size)
        mode = int(np.argmin(satd(orig[None] - preds)))
        pred = preds[mode]
        resid = orig - pred
        tu, offsets = _tu_blocks(size)
        blocks = []
        bits = (1 if size > MIN_CU_SIZE else 0) + MODE_BITS
        for dy, dx in offsets:
            q = quantize(forward_transform(resid[dy:dy + tu, dx:dx + tu]), self.qp)
            blocks.append(q)
            bits += coeff_bits(q)
        rec = np.clip(pred + residual_from_coeffs(blocks, size, self.qp), 0, 255)
        sse = float(((orig - rec) ** 2).sum())
        node = CodingTree(x, y, size, mode=mode, coeff_blocks=tuple(blocks))
        return sse + self.lam * bits, node, rec.astype(np.uint8)

    def cu(self, x, y, size):
        cost, node, rec = self.leaf(x, y, size)
        if size > MIN_CU_SIZE:
            half = size // 2
            split_cost = self.lam
            children = []
            for dy in (0, half):
                for dx in (0, half):
                    c, child = self.cu(x + dx, y + dy, half)
                    split_cost += c
                    children.append(child)
            if split_cost < cost:
                return split_cost, CodingTree(x, y, size, children=tuple(children))
        self.recon[y:y + size, x:x + size] = rec
        return cost, node


def encode_frame(frame: Frame, cfg: CodecConfig = CodecConfig()) -> EncodeResult:
    """Encode a frame; returns the container, the encoder's own
    reconstruction (what a standard decode must reproduce) and stats."""
    src = pad_frame(frame)
    enc = _Encoder(src, cfg.qp)
    w = BitWriter()
    trees = []
    ph, pw = src.shape
    for cy in range(0, ph, CTU_SIZE):
        for cx in range(0, pw, CTU_SIZE):
            _, tree = enc.cu(cx, cy, CTU_SIZE)
            encode_tree(w, tree)
            trees.append(tree)
    recon = enc.recon
    if cfg.loop_filter_enabled:
        recon = deblock(recon, edge_maps(trees, pw, ph), cfg.qp)
    payload = w.getvalue()
    encoded = EncodedImage(frame.width, frame.height, cfg.qp, cfg.loop_filter_enabled, payload)
    leaves = [lf for t in trees for lf in t.leaves()]
    stats = {
        "bytes": encoded.size_bytes,
        "payload_bits": w.bits_written,
        "bpp": 8.0 * encoded.size_bytes / (frame.width * frame.height),
        "ctus": len(trees),
        "cus": len(leaves),
        "cu_sizes": {s: sum(1 for lf in leaves if lf.size == s) for s in (8, 16, 32, 64)},
        "modes": np.bincount([lf.mode for lf in leaves], minlength=NUM_MODES).tolist(),
    }
    return EncodeResult(encoded, Frame.from_array(recon[:frame.height, :frame.width]), stats)


# ---------------------------------------------------------------------------
# decoder

@dataclass
class DecodeResult:
    frame: Frame
    timings: StageTimings
    trees: list = field(repr=False)
    bits_consumed: int = 0


@lru_cache(maxsize=32)
def cached_rp_series(sigma: float, seed: int) -> RpSeries:
    return generate_rp_series(sigma, seed)


def parse_trees(enc: EncodedImage) -> tuple[list, int]:
    """Entropy-decode every CTU without reconstructing; returns the trees and
    the number of payload bits consumed."""
    pw, ph = padded_dims(enc.width, enc.height)
    r = BitReader(enc.payload)
    trees = [decode_tree(r, cx, cy, CTU_SIZE)
             for cy in range(0, ph, CTU_SIZE) for cx in range(0, pw, CTU_SIZE)]
    consumed = r.pos
    _check_trailing(r)
    return trees, consumed


def _check_trailing(r: BitReader) -> None:
    if r.remaining >= 8:
        raise BitstreamError(f"{r.remaining} unparsed bits after the last CTU")
    if r.remaining and r.read_bits(r.remaining):
        raise BitstreamError("nonzero padding bits")


def decode_frame(enc: EncodedImage, strategy=Standard(), rp: Optional[RpSeries] = None) -> DecodeResult:
    """Decode under a reconstruction strategy, timing each stage.

    Stage accounting: ``ed`` covers tree/coefficient parsing, ``ip``
    reference gathering, smoothing, prediction and (for substitution
    strategies) adding the substitute, ``rd`` dequantization, inverse
    transform and the residual add (Standard only), ``lf`` deblocking.
    """
    if isinstance(strategy, RandomPerturbation) and rp is None:
        rp = cached_rp_series(float(strategy.sigma), int(strategy.seed))
    if isinstance(enc, (bytes, bytearray)):
        enc = EncodedImage.from_bytes(enc)
    standard = isinstance(strategy, Standard)
    if not isinstance(strategy, (Standard, ZeroResidual, ConstantResidual, RandomPerturbation)):
        raise TypeError(f"unknown strategy {strategy!r}")
    qp = enc.qp
    clock = time.perf_counter
    t = StageTimings()
    start = clock()

    pw, ph = padded_dims(enc.width, enc.height)
    recon = np.zeros((ph, pw), dtype=np.uint8)
    r = BitReader(enc.payload)
    trees = []
    gather = intra.gather_reference_samples
    smooth = intra.smooth_reference_samples
    predict = intra.predict
    for cy in range(0, ph, CTU_SIZE):
        for cx in range(0, pw, CTU_SIZE):
            t0 = clock()
            tree = decode_tree(r, cx, cy, CTU_SIZE)
            t1 = clock()
            t.ed += t1 - t0
            trees.append(tree)
            for lf in tree.leaves():
                x, y, n = lf.x, lf.y, lf.size
                t0 = clock()
                pred = predict(smooth(gather(recon, x, y, n), n, lf.mode), n, lf.mode)
                if standard:
                    t1 = clock()
                    t.ip += t1 - t0
                    rec = reconstruct_cu(pred, lf.coeff_blocks, strategy, qp=qp)
                    recon[y:y + n, x:x + n] = rec
                    t.rd += clock() - t1
                else:
                    recon[y:y + n, x:x + n] = reconstruct_cu(pred, None, strategy, rp)
                    t.ip += clock() - t0
    consumed = r.pos
    t0 = clock()
    _check_trailing(r)
    t.ed += clock() - t0

    if enc.loop_filter:
        t0 = clock()
        recon = deblock(recon, edge_maps(trees, pw, ph), qp)
        t.lf += clock() - t0
    out = Frame.from_array(recon[:enc.height, :enc.width])
    t.wall = clock() - start
    return DecodeResult(out, t, trees, consumed)
