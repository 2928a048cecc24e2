"""Test images: a bright geometric shape on a smooth, darker background."""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def blurred_background(shape, seed=0, blur=3.0, lo=0.1, hi=0.4) -> np.ndarray:
    """Gaussian-smoothed white noise rescaled to [lo, hi]."""
    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.random(shape), blur, mode="reflect")
    field -= field.min()
    span = field.max()
    if span > 0:
        field /= span
    return lo + (hi - lo) * field


def square_image(size=64, side=24, fg=0.9, seed=0, blur=3.0, bg_range=(0.1, 0.4)):
    """(image, truth) with a centred ``side`` x ``side`` square of gray ``fg``."""
    img = blurred_background((size, size), seed, blur, *bg_range)
    truth = np.zeros((size, size), dtype=bool)
    a = (size - side) // 2
    truth[a:a + side, a:a + side] = True
    img[truth] = fg
    return img, truth


def circle_image(size=64, radius=12.0, fg=0.9, seed=0, blur=3.0, bg_range=(0.1, 0.4)):
    img = blurred_background((size, size), seed, blur, *bg_range)
    r, c = np.indices((size, size))
    centre = (size - 1) / 2.0
    truth = (r - centre) ** 2 + (c - centre) ** 2 <= radius * radius
    img[truth] = fg
    return img, truth


def uniform_particles(n: int, seed: int = 0):
    """``n`` positions uniform on [-1, 1]^2 with features uniform on [0, 1]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, (n, 2)), rng.random(n)
