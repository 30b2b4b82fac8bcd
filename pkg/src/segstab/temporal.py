"""1-D Gaussian blur along the leading (time) axis of an array."""
from __future__ import annotations

import numpy as np


def blur_along_time(values: np.ndarray, sigma_frames: float) -> np.ndarray:
    """Gaussian-blur an array of shape (T, ...) along axis 0.

    The kernel is truncated at |dt| <= 3 sigma and renormalized over the
    taps that fall inside the clip, so a time-constant signal is preserved
    exactly even at the ends. ``sigma_frames = 0`` is the identity.
    """
    if sigma_frames < 0:
        raise ValueError("sigma must be non-negative")
    values = np.asarray(values, dtype=np.float64)
    t = values.shape[0]
    radius = int(np.floor(3.0 * sigma_frames)) if sigma_frames > 0 else 0
    if radius == 0:
        return values.copy()
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-(offsets.astype(np.float64) ** 2) / (2.0 * sigma_frames**2))
    acc = np.zeros_like(values)
    norm = np.zeros(t, dtype=np.float64)
    for off, w in zip(offsets, kernel):
        dst_lo, dst_hi = max(0, -off), min(t, t - off)
        if dst_hi <= dst_lo:
            continue
        acc[dst_lo:dst_hi] += w * values[dst_lo + off : dst_hi + off]
        norm[dst_lo:dst_hi] += w
    shape = (t,) + (1,) * (values.ndim - 1)
    return acc / norm.reshape(shape)
