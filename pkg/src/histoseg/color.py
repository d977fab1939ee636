"""Vectorized RGB/HSV conversion on float arrays.

Hue is stored in [0, 1) (fraction of a turn), saturation and value in [0, 1].
Conversions are pure NumPy so results are identical across platforms.
"""

import numpy as np


def rgb_to_hsv(rgb):
    """Convert an (..., 3) float array in [0, 1] to HSV channels.

    Returns (h, s, v) arrays of shape rgb.shape[:-1].
    """
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)

    dsafe = np.where(delta > 0, delta, 1.0)
    rc = (maxc - r) / dsafe
    gc = (maxc - g) / dsafe
    bc = (maxc - b) / dsafe
    h = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return h, s, v


def hsv_to_rgb(h, s, v):
    """Inverse of rgb_to_hsv; returns an (..., 3) float array."""
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))

    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)
