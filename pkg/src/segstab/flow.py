"""Flow-based warping and forward-backward occlusion detection.

Warps use the backward-sampling convention: to express frame p's mask on
frame q's grid, pass the flow computed from q to p, and each target pixel
``y`` samples the source at ``y + flow(y)``. Labels are sampled
nearest-neighbor (categorical data must not be interpolated); soft
confidence planes are sampled bilinearly with zero padding.
"""
from __future__ import annotations

import numpy as np

from .types import FlowField, LabelMask, OcclusionMask

DEFAULT_ALPHA = 0.01
DEFAULT_BETA = 0.5


def _sample_positions(flow: FlowField) -> tuple[np.ndarray, np.ndarray]:
    h, w = flow.height, flow.width
    gy, gx = np.mgrid[0:h, 0:w]
    px = gx + flow.vectors[:, :, 0].astype(np.float64)
    py = gy + flow.vectors[:, :, 1].astype(np.float64)
    return px, py


def warp_labels(mask: LabelMask, reverse_flow: FlowField) -> tuple[LabelMask, OcclusionMask]:
    """Warp a label mask through a flow field with nearest-neighbor sampling.

    Out-of-bounds samples receive label 0 (background) and validity 0.
    """
    if (mask.height, mask.width) != (reverse_flow.height, reverse_flow.width):
        raise ValueError("mask and flow dimensions do not match")
    px, py = _sample_positions(reverse_flow)
    ix = np.floor(px + 0.5).astype(np.int64)
    iy = np.floor(py + 0.5).astype(np.int64)
    valid = (ix >= 0) & (ix < mask.width) & (iy >= 0) & (iy < mask.height)
    out = np.zeros_like(mask.labels)
    out[valid] = mask.labels[iy[valid], ix[valid]]
    return LabelMask(out, mask.num_classes), OcclusionMask(valid)


def warp_soft(planes: np.ndarray, reverse_flow: FlowField) -> tuple[np.ndarray, OcclusionMask]:
    """Warp per-class confidence planes (C, H, W) with zero-padded bilinear sampling.

    Validity is 1 only where the sample position has full in-bounds bilinear
    support; positions straddling the border still receive their zero-padded
    value but are marked invalid.
    """
    planes = np.asarray(planes, dtype=np.float32)
    if planes.ndim == 2:
        planes = planes[None]
    h, w = planes.shape[1], planes.shape[2]
    if (h, w) != (reverse_flow.height, reverse_flow.width):
        raise ValueError("planes and flow dimensions do not match")
    px, py = _sample_positions(reverse_flow)
    sampled = _bilinear_zero_pad(planes, px, py)
    valid = (px >= 0) & (px <= w - 1) & (py >= 0) & (py <= h - 1)
    return sampled.astype(np.float32), OcclusionMask(valid)


def _bilinear_zero_pad(planes: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Bilinear sample (C, H, W) planes at float positions, zero outside."""
    h, w = planes.shape[1], planes.shape[2]
    x0 = np.floor(px).astype(np.int64)
    y0 = np.floor(py).astype(np.int64)
    fx = px - x0
    fy = py - y0
    out = np.zeros((planes.shape[0],) + px.shape, dtype=np.float64)
    for dy, dx, wgt in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        tx = x0 + dx
        ty = y0 + dy
        inb = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
        txc = np.clip(tx, 0, w - 1)
        tyc = np.clip(ty, 0, h - 1)
        out += np.where(inb, planes[:, tyc, txc] * wgt, 0.0)
    return out


def occlusion_mask(
    forward: FlowField,
    backward: FlowField,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
) -> OcclusionMask:
    """Forward-backward consistency check of a flow pair.

    Pixel x (on the forward flow's source grid) is occluded when the
    composed round trip fails to return near the origin:

        |F_fwd(x) + F_bwd(x + F_fwd(x))|^2 > alpha * (|F_fwd(x)|^2 + |F_bwd|^2) + beta

    with the backward flow sampled bilinearly at the forward target.
    Targets without full in-bounds bilinear support are occluded.
    """
    if (forward.height, forward.width) != (backward.height, backward.width):
        raise ValueError("flow field dimensions do not match")
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be non-negative")
    h, w = forward.height, forward.width
    fwd = forward.vectors.astype(np.float64)
    px, py = _sample_positions(forward)
    bwd_planes = np.moveaxis(backward.vectors.astype(np.float64), 2, 0)  # (2, H, W)
    bwd_at_target = np.moveaxis(_bilinear_zero_pad(bwd_planes, px, py), 0, 2)  # (H, W, 2)
    in_bounds = (px >= 0) & (px <= w - 1) & (py >= 0) & (py <= h - 1)
    diff_sq = ((fwd + bwd_at_target) ** 2).sum(axis=2)
    mag_sq = (fwd**2).sum(axis=2) + (bwd_at_target**2).sum(axis=2)
    consistent = diff_sq <= alpha * mag_sq + beta
    return OcclusionMask(consistent & in_bounds)
