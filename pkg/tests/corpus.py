"""Test corpus: crops of scikit-image sample pictures, converted to luma.

Crop sizes are deliberately not multiples of 64 so padding and cropping
are exercised on every image.
"""

from functools import lru_cache

import numpy as np

from rpcodec.core import Frame
from rpcodec.imageio import rgb_to_luma

# name, loader, (row, col) origin, (height, width)
CORPUS_SPEC = [
    ("astronaut", "astronaut", (60, 150), (136, 152)),
    ("brick", "brick", (200, 100), (120, 136)),
    ("camera", "camera", (90, 140), (150, 130)),
    ("chelsea", "chelsea", (40, 120), (144, 168)),
    ("clock", "clock", (60, 80), (128, 150)),
    ("coffee", "coffee", (50, 150), (140, 200)),
    ("coins", "coins", (20, 40), (130, 142)),
    ("grass", "grass", (100, 300), (100, 140)),
    ("gravel", "gravel", (250, 50), (120, 120)),
    ("hubble", "hubble_deep_field", (300, 400), (136, 136)),
    ("immuno", "immunohistochemistry", (100, 100), (150, 110)),
    ("moon", "moon", (150, 180), (128, 160)),
    ("page", "page", (20, 60), (150, 200)),
    ("retina", "retina", (500, 500), (140, 140)),
    ("retina_rim", "retina", (100, 600), (120, 176)),
    ("rocket", "rocket", (100, 250), (160, 120)),
    ("text", "text", (10, 100), (150, 190)),
    ("microaneurysms", "microaneurysms", (0, 0), (102, 102)),
    ("cell", "cell", (200, 200), (144, 130)),
    ("coffee_cup", "coffee", (150, 330), (128, 144)),
]


def _load(loader):
    from skimage import data

    a = np.asarray(getattr(data, loader)())
    if a.ndim == 3:
        a = rgb_to_luma(a[..., :3])
    return a.astype(np.uint8)


@lru_cache(maxsize=None)
def corpus():
    """List of (name, Frame), 20 entries."""
    cache = {}
    out = []
    for name, loader, (r, c), (h, w) in CORPUS_SPEC:
        if loader not in cache:
            cache[loader] = _load(loader)
        crop = cache[loader][r:r + h, c:c + w]
        assert crop.shape == (h, w), (name, crop.shape)
        out.append((name, Frame.from_array(crop)))
    return tuple(out)


@lru_cache(maxsize=None)
def megapixel_frame():
    """1024x1024 luma crop of the retina picture (>= 1 megapixel)."""
    return Frame.from_array(_load("retina")[190:1214, 190:1214])
