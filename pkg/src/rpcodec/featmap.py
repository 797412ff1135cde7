"""Partition and mode images rendered from decoded coding trees.

Conventions: the partition map is white with every leaf outlined by a
1-pixel black rectangle inside the leaf; the mode map fills each leaf with
round(mode * 255 / 34) and draws the same outlines at 0.
"""

from __future__ import annotations

import numpy as np

from .core import NUM_MODES, Frame, padded_dims


def _canvas(trees, width: int, height: int):
    pw, ph = padded_dims(width, height)
    covered = np.zeros((ph, pw), dtype=bool)
    leaves = []
    for t in trees:
        for lf in t.leaves():
            if lf.x + lf.size > pw or lf.y + lf.size > ph:
                raise ValueError(f"leaf at ({lf.x}, {lf.y}) lies outside the frame")
            covered[lf.y:lf.y + lf.size, lf.x:lf.x + lf.size] = True
            leaves.append(lf)
    if not covered[:height, :width].all():
        raise ValueError("coding trees leave part of the frame uncovered")
    return leaves, (ph, pw)


def _outline(img: np.ndarray, lf, value: int) -> None:
    x, y, s = lf.x, lf.y, lf.size
    img[y, x:x + s] = value
    img[y + s - 1, x:x + s] = value
    img[y:y + s, x] = value
    img[y:y + s, x + s - 1] = value


def mode_intensity(mode: int) -> int:
    return int(np.floor(mode * 255 / (NUM_MODES - 1) + 0.5))


def render_partition_map(trees, width: int, height: int) -> Frame:
    leaves, shape = _canvas(trees, width, height)
    img = np.full(shape, 255, dtype=np.uint8)
    for lf in leaves:
        _outline(img, lf, 0)
    return Frame.from_array(img[:height, :width])


def render_mode_map(trees, width: int, height: int) -> Frame:
    leaves, shape = _canvas(trees, width, height)
    img = np.zeros(shape, dtype=np.uint8)
    for lf in leaves:
        img[lf.y:lf.y + lf.size, lf.x:lf.x + lf.size] = mode_intensity(lf.mode)
        _outline(img, lf, 0)
    return Frame.from_array(img[:height, :width])
