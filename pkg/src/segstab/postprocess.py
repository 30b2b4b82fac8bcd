"""Temporal stabilization of soft segmentation volumes.

The main tool is a 3D weighted guided filter: confidence planes are stacked
into a (time, y, x) volume, the frame stack acts as the guide, and each
class plane is filtered independently before the downstream argmax. Pixels
with confidence near 0.5 get a smaller weight in the local regressions. A
plain temporal Gaussian blur is provided as the baseline.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .temporal import blur_along_time
from .types import Image, SoftMaskVolume


@dataclass(frozen=True)
class WgfConfig:
    radius_x: int = 8
    radius_y: int = 8
    radius_t: int = 2
    epsilon: float = 1e-2
    weight_floor: float = 0.05

    def __post_init__(self):
        if min(self.radius_x, self.radius_y, self.radius_t) < 0:
            raise ValueError("radii must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.weight_floor <= 1:
            raise ValueError("weight_floor must lie in (0, 1]")


def confidence_weights(plane: np.ndarray, weight_floor: float) -> np.ndarray:
    """Per-pixel regression weight, smallest at confidence 0.5."""
    return weight_floor + (1.0 - weight_floor) * np.abs(2.0 * plane - 1.0)


def _box_sum(cfg: WgfConfig):
    """Zero-padded 3D box summation over (t, y, x) windows."""
    size = (2 * cfg.radius_t + 1, 2 * cfg.radius_y + 1, 2 * cfg.radius_x + 1)
    volume = float(np.prod(size))

    def box(arr: np.ndarray) -> np.ndarray:
        return uniform_filter(arr, size=size, mode="constant", cval=0.0) * volume

    return box


def _filter_plane(guide: np.ndarray, plane: np.ndarray, cfg: WgfConfig):
    """Weighted guided filtering of one (T, H, W) confidence plane.

    ``guide`` is (T, H, W, C). Returns the filtered plane together with the
    per-pixel linear coefficients (a, b) before their final box averaging.
    """
    box = _box_sum(cfg)
    t, h, w_, c = guide.shape
    chans = [guide[..., k].astype(np.float64) for k in range(c)]
    p = plane.astype(np.float64)
    wgt = confidence_weights(p, cfg.weight_floor)

    box_w = box(wgt)
    mu_p = box(wgt * p) / box_w
    mu_i = [box(wgt * ch) / box_w for ch in chans]
    cov_ip = [box(wgt * ch * p) / box_w - mu_i[k] * mu_p for k, ch in enumerate(chans)]

    mat = np.empty((t, h, w_, c, c), dtype=np.float64)
    for k in range(c):
        for l in range(k, c):
            cov = box(wgt * chans[k] * chans[l]) / box_w - mu_i[k] * mu_i[l]
            mat[..., k, l] = cov
            mat[..., l, k] = cov
        mat[..., k, k] += cfg.epsilon
    rhs = np.stack(cov_ip, axis=-1)

    a = np.linalg.solve(mat, rhs[..., None])[..., 0]  # (T, H, W, C)
    b = mu_p - sum(a[..., k] * mu_i[k] for k in range(c))

    counts = box(np.ones((t, h, w_), dtype=np.float64))
    mean_a = [box(a[..., k]) / counts for k in range(c)]
    mean_b = box(b) / counts
    out = mean_b + sum(mean_a[k] * chans[k] for k in range(c))
    return np.clip(out, 0.0, 1.0), a, b


def wgf_3d(frames: list[Image] | tuple[Image, ...], volume: SoftMaskVolume, cfg: WgfConfig | None = None) -> SoftMaskVolume:
    """3D weighted guided filter over a soft mask volume.

    Each class plane is regressed locally onto the guide (the frame stack)
    over 3D box windows, with low-confidence pixels downweighted; the
    regression coefficients are then box-averaged and applied. With
    ``radius_t = 0`` this reduces to filtering every frame independently.
    """
    cfg = cfg or WgfConfig()
    if len(frames) != volume.num_frames:
        raise ValueError("guide frame count does not match volume")
    ch = frames[0].channels
    for f in frames:
        if (f.height, f.width) != (volume.height, volume.width):
            raise ValueError("guide dimensions do not match volume")
        if f.channels != ch:
            raise ValueError("guide frames have mixed channel counts")
    guide = np.stack([f.data for f in frames]).astype(np.float64)  # (T, H, W, C)
    out = np.empty_like(volume.values)
    for c in range(volume.num_classes):
        filtered, _, _ = _filter_plane(guide, volume.values[:, c], cfg)
        out[:, c] = filtered.astype(np.float32)
    return SoftMaskVolume(out)


def temporal_gaussian_smooth(volume: SoftMaskVolume, sigma_frames: float) -> SoftMaskVolume:
    """Per-class, per-pixel Gaussian blur along time; sigma 0 is the identity."""
    if sigma_frames < 0:
        raise ValueError("sigma_frames must be non-negative")
    blurred = blur_along_time(volume.values.astype(np.float64), sigma_frames)
    return SoftMaskVolume(np.clip(blurred, 0.0, 1.0).astype(np.float32))
