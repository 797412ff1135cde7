"""Hypothesis strategies for coding trees."""

import numpy as np
from hypothesis import strategies as st

from rpcodec.core import CodingTree, leaf, split


@st.composite
def coeff_block(draw, n):
    nnz = draw(st.integers(0, min(6, n * n)))
    blk = np.zeros(n * n, dtype=np.int32)
    if nnz:
        pos = draw(st.lists(st.integers(0, n * n - 1), min_size=nnz, max_size=nnz, unique=True))
        vals = draw(st.lists(st.integers(-300, 300).filter(bool), min_size=nnz, max_size=nnz))
        blk[pos] = vals
    return blk.reshape(n, n)


@st.composite
def coding_tree(draw, x=0, y=0, size=64, split_p=0.5):
    if size > 8 and draw(st.floats(0, 1)) < split_p:
        h = size // 2
        return split(x, y, size, [draw(coding_tree(x + dx, y + dy, h, split_p * 0.8))
                                  for dy in (0, h) for dx in (0, h)])
    tu = min(size, 32)
    blocks = [draw(coeff_block(tu)) for _ in range((size // tu) ** 2)]
    return leaf(x, y, size, draw(st.integers(0, 34)), blocks)


def full_split(x=0, y=0, size=64) -> CodingTree:
    if size == 8:
        return leaf(x, y, 8, 0)
    h = size // 2
    return split(x, y, size, [full_split(x + dx, y + dy, h) for dy in (0, h) for dx in (0, h)])
