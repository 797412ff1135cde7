"""
Intra prediction: reference sample gathering, substitution, smoothing, and
the 35 prediction modes.

Modes:
- 0: Planar
- 1: DC
- 2..34: Angular; 10 is pure horizontal, 26 pure vertical

Reference samples are kept as two arrays, ``top`` (2N+1 entries, index 0 is
the top-left corner) and ``left`` (2N entries, top to bottom).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import CTU_SIZE, DC, MIN_CU_SIZE, NUM_MODES, PLANAR

# angle in 1/32 sample units, modes 2..34
INTRA_PRED_ANGLE = np.array([
    32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26,
    -32, -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32,
])

# inverse angle (256 * 32 / angle), modes 11..25
INV_ANGLE = {
    11: -4096, 12: -1638, 13: -910, 14: -630, 15: -482, 16: -390, 17: -315,
    18: -256, 19: -315, 20: -390, 21: -482, 22: -630, 23: -910, 24: -1638, 25: -4096,
}

# smoothing threshold on min(|mode-10|, |mode-26|)
_SMOOTH_THRESHOLD = {8: 7, 16: 1, 32: 0, 64: 0}

DEFAULT_SAMPLE = 128


@dataclass(frozen=True)
class RefSamples:
    top: np.ndarray
    left: np.ndarray

    @property
    def size(self) -> int:
        return len(self.left) // 2


def _angle(mode: int) -> int:
    return int(INTRA_PRED_ANGLE[mode - 2])


@lru_cache(maxsize=16)
def _zscan_map(h8: int, w8: int) -> np.ndarray:
    """Decoding order of every 8x8 block of a (padded) frame."""
    per = CTU_SIZE // MIN_CU_SIZE
    ctus_w = -(-w8 // per)
    by, bx = np.mgrid[0:h8, 0:w8]
    ctu = (by // per) * ctus_w + bx // per
    lx, ly = bx % per, by % per
    morton = np.zeros_like(lx)
    for bit in range(3):
        morton |= ((lx >> bit) & 1) << (2 * bit)
        morton |= ((ly >> bit) & 1) << (2 * bit + 1)
    z = ctu * per * per + morton
    z.flags.writeable = False
    return z


def gather_reference_samples(recon, x: int, y: int, size: int) -> RefSamples:
    """Collect and substitute the reference samples of the CU at (x, y).

    A neighbouring sample is available when it lies inside ``recon`` and was
    decoded before the CU (z-scan order). Missing samples are filled by
    propagation from the bottom-left end, clockwise; with nothing
    available every entry is 128.
    """
    arr = recon.samples if hasattr(recon, "samples") else recon
    h, w = arr.shape
    if x < 0 or y < 0 or x + size > w or y + size > h or x % MIN_CU_SIZE or y % MIN_CU_SIZE:
        raise ValueError(f"CU rectangle ({x}, {y}, {size}) outside frame {w}x{h}")
    z = _zscan_map(h // MIN_CU_SIZE, w // MIN_CU_SIZE)
    cur = z[y // MIN_CU_SIZE, x // MIN_CU_SIZE]
    n2 = 2 * size
    seg = MIN_CU_SIZE

    # flat order: left bottom->top (2N), corner, top left->right (2N)
    vals = np.full(2 * n2 + 1, -1, dtype=np.int32)

    def avail(px, py):
        return 0 <= px < w and 0 <= py < h and z[py // seg, px // seg] < cur

    if x > 0:
        for k in range(n2 // seg):
            py = y + k * seg
            if avail(x - 1, py):
                end = min(py + seg, h)
                col = arr[py:end, x - 1].astype(np.int32)
                # left sample at row offset r sits at flat index n2-1-r
                r0 = k * seg
                vals[n2 - r0 - len(col):n2 - r0] = col[::-1]
    if x > 0 and y > 0 and avail(x - 1, y - 1):
        vals[n2] = arr[y - 1, x - 1]
    if y > 0:
        for k in range(n2 // seg):
            px = x + k * seg
            if avail(px, y - 1):
                end = min(px + seg, w)
                vals[n2 + 1 + k * seg:n2 + 1 + k * seg + end - px] = arr[y - 1, px:end]

    missing = vals < 0
    if missing.all():
        vals[:] = DEFAULT_SAMPLE
    elif missing.any():
        first = int(np.argmax(~missing))
        vals[:first] = vals[first]
        # forward fill of the remaining holes
        idx = np.where(missing, 0, np.arange(len(vals)))
        np.maximum.accumulate(idx, out=idx)
        vals = vals[idx]
    return _from_flat(vals, size)


def _from_flat(flat: np.ndarray, size: int) -> RefSamples:
    n2 = 2 * size
    return RefSamples(top=flat[n2:].copy(), left=flat[:n2][::-1].copy())


def _to_flat(refs: RefSamples) -> np.ndarray:
    return np.concatenate([refs.left[::-1], refs.top]).astype(np.int32)


def needs_smoothing(size: int, mode: int) -> bool:
    if mode == DC or size < 8:
        return False
    if mode == PLANAR:
        return True
    dist = min(abs(mode - 10), abs(mode - 26))
    return dist > _SMOOTH_THRESHOLD[size]


def _smooth_flat(flat: np.ndarray) -> np.ndarray:
    out = flat.copy()
    out[1:-1] = (flat[:-2] + 2 * flat[1:-1] + flat[2:] + 2) >> 2
    return out


def smooth_reference_samples(refs: RefSamples, size: int, mode: int) -> RefSamples:
    """[1 2 1]/4 filter along the reference line for modes that need it."""
    _check_mode(mode)
    if not needs_smoothing(size, mode):
        return refs
    return _from_flat(_smooth_flat(_to_flat(refs)), size)


def _check_mode(mode: int) -> None:
    if not 0 <= mode < NUM_MODES:
        raise ValueError(f"intra mode must be in [0, 34], got {mode}")


@lru_cache(maxsize=None)
def _angular_table(size: int, mode: int):
    """Gather indices into concat(top, left) and interpolation weights."""
    n = size
    angle = _angle(mode)
    # ref[k] for k in [-n, 2n] stored at offset n
    ref = np.full(3 * n + 1, -1, dtype=np.int64)
    vertical = mode >= 18
    for k in range(0, 2 * n + 1):
        if vertical:
            ref[n + k] = k                      # top[k]
        else:
            ref[n + k] = 0 if k == 0 else 2 * n + k   # corner, then left[k-1]
    if angle < 0 and (n * angle) >> 5 < -1:
        inv = INV_ANGLE[mode]
        for k in range((n * angle) >> 5, 0):
            j = (k * inv + 128) >> 8
            if vertical:
                # p[-1][j-1]: corner when j == 0, else left[j-1]
                ref[n + k] = 0 if j == 0 else 2 * n + 1 + (j - 1)
            else:
                ref[n + k] = j                  # top[j]
    pos = np.arange(n)
    step = (pos + 1) * angle
    i = step >> 5
    f = step & 31
    # main[a][b]: a runs along the projection axis, b across it
    ia = pos[None, :] + i[:, None] + 1
    ib = np.where(f[:, None] == 0, ia, ia + 1)
    idx_a = ref[n + ia]
    idx_b = ref[n + ib]
    fact = np.broadcast_to(f[:, None], (n, n)).copy()
    if not vertical:
        idx_a, idx_b, fact = idx_a.T.copy(), idx_b.T.copy(), fact.T.copy()
    assert (idx_a >= 0).all() and (idx_b >= 0).all()
    return idx_a, idx_b, fact


def _predict_planar(top, left, n):
    log2 = n.bit_length() - 1
    xs = np.arange(n)
    tr = int(top[n + 1])
    bl = int(left[n])
    t = top[1:n + 1].astype(np.int32)
    l = left[:n].astype(np.int32)
    hor = (n - 1 - xs)[None, :] * l[:, None] + (xs + 1)[None, :] * tr
    ver = (n - 1 - xs)[:, None] * t[None, :] + (xs + 1)[:, None] * bl
    return (hor + ver + n) >> (log2 + 1)


def _predict_dc(top, left, n):
    log2 = n.bit_length() - 1
    t = top[1:n + 1].astype(np.int32)
    l = left[:n].astype(np.int32)
    dc = (int(t.sum()) + int(l.sum()) + n) >> (log2 + 1)
    pred = np.full((n, n), dc, dtype=np.int32)
    if n < 32:
        pred[0, 0] = (l[0] + 2 * dc + t[0] + 2) >> 2
        pred[0, 1:] = (t[1:] + 3 * dc + 2) >> 2
        pred[1:, 0] = (l[1:] + 3 * dc + 2) >> 2
    return pred


def _predict_angular(top, left, n, mode):
    idx_a, idx_b, fact = _angular_table(n, mode)
    v = np.concatenate([top, left]).astype(np.int32)
    return ((32 - fact) * v[idx_a] + fact * v[idx_b] + 16) >> 5


def predict(refs: RefSamples, size: int, mode: int) -> np.ndarray:
    """Predict an NxN block from (already smoothed) reference samples.

    Returns int32 samples in [0, 255], indexed [row, col].
    """
    _check_mode(mode)
    if len(refs.top) != 2 * size + 1 or len(refs.left) != 2 * size:
        raise ValueError("reference sample arrays do not match block size")
    if mode == PLANAR:
        return _predict_planar(refs.top, refs.left, size)
    if mode == DC:
        return _predict_dc(refs.top, refs.left, size)
    return _predict_angular(refs.top, refs.left, size, mode)


def predict_cu(recon, x: int, y: int, size: int, mode: int) -> np.ndarray:
    """Gather, smooth and predict in one step."""
    refs = gather_reference_samples(recon, x, y, size)
    return predict(smooth_reference_samples(refs, size, mode), size, mode)


@lru_cache(maxsize=None)
def _batch_tables(size: int):
    tabs = [_angular_table(size, m) for m in range(2, NUM_MODES)]
    idx_a = np.stack([t[0] for t in tabs])
    idx_b = np.stack([t[1] for t in tabs])
    fact = np.stack([t[2] for t in tabs]).astype(np.int32)
    filt = np.array([needs_smoothing(size, m) for m in range(2, NUM_MODES)])
    # filtered refs live in the second half of the stacked vector
    span = 4 * size + 1
    off = np.where(filt, span, 0)[:, None, None]
    return idx_a + off, idx_b + off, fact


def predict_all_modes(refs: RefSamples, size: int) -> np.ndarray:
    """Predictions for all 35 modes from unsmoothed ``refs``, shape (35, N, N).

    Each mode gets the smoothing it would get in :func:`predict_cu`. Used by
    mode search.
    """
    top = refs.top.astype(np.int32)
    left = refs.left.astype(np.int32)
    flat = _to_flat(refs)
    sm = _from_flat(_smooth_flat(flat), size) if size >= 8 else refs
    out = np.empty((NUM_MODES, size, size), dtype=np.int32)
    out[PLANAR] = _predict_planar(sm.top, sm.left, size) if needs_smoothing(size, PLANAR) \
        else _predict_planar(top, left, size)
    out[DC] = _predict_dc(top, left, size)
    idx_a, idx_b, fact = _batch_tables(size)
    v = np.concatenate([top, left, sm.top.astype(np.int32), sm.left.astype(np.int32)])
    out[2:] = ((32 - fact) * v[idx_a] + fact * v[idx_b] + 16) >> 5
    return out
