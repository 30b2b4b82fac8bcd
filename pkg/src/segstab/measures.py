"""Temporal consistency and smoothness measures, plus mask accuracy metrics.

The flow-based consistency measure compares each mask with its neighbors
warped along the optical flow, ignoring occluded pixels; the smoothness
measure penalizes high-frequency change of the mask signal along time
regardless of motion. Both can be normalized against object size.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .flow import DEFAULT_ALPHA, DEFAULT_BETA, occlusion_mask, warp_labels
from .temporal import blur_along_time
from .types import FlowField, Image, LabelMask, VideoSequence, one_hot_volume

log = logging.getLogger(__name__)

THREADS_ENV_VAR = "SEGSTAB_THREADS"


class Normalization(Enum):
    """Scale constant applied to the video consistency measure."""

    NONE = "none"
    SQRT_NON_BACKGROUND = "sqrt-nonbg"
    BOUNDARY_MEDIAN = "boundary-median"


@dataclass(frozen=True)
class ConsistencyConfig:
    window_k: int = 3
    normalization: Normalization = Normalization.BOUNDARY_MEDIAN
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    # Restores the verbatim same-label indicator, under which perfect
    # tracking scores worst; kept for comparison only.
    literal_d_cat: bool = False

    def __post_init__(self):
        if self.window_k < 1:
            raise ValueError("window_k must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass(frozen=True)
class MeasureReport:
    """Consistency result with enough context to reproduce the headline number."""

    e_cons: float
    per_pair_terms: tuple[tuple[int, int, float], ...]
    n_bd_median: float
    n_nbg_total: int
    normalization: Normalization
    e_smooth: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.e_cons < 0:
            raise ValueError("e_cons must be non-negative")
        if self.e_smooth is not None and self.e_smooth < 0:
            raise ValueError("e_smooth must be non-negative")


def worker_count() -> int:
    """Worker cap from the SEGSTAB_THREADS environment variable (0/unset = auto)."""
    raw = os.environ.get(THREADS_ENV_VAR, "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{THREADS_ENV_VAR} must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def d_cat(a: LabelMask, b: LabelMask) -> np.ndarray:
    """Per-pixel disagreement indicator: 1 where labels differ, 0 where equal."""
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError("mask dimensions do not match")
    return (a.labels != b.labels).astype(np.uint8)


def _pair_term(
    target: LabelMask,
    source: LabelMask,
    reverse_flow: FlowField,
    forward_flow: FlowField,
    cfg: ConsistencyConfig,
) -> float:
    """One direction of the pairwise discrepancy, on the target frame's grid."""
    warped, warp_valid = warp_labels(source, reverse_flow)
    occ = occlusion_mask(reverse_flow, forward_flow, cfg.alpha, cfg.beta)
    m = occ.as_bool & warp_valid.as_bool
    m_total = int(m.sum())
    if m_total == 0:
        log.warning("fully occluded pair term; contributing 0")
        return 0.0
    d = d_cat(target, warped)
    if cfg.literal_d_cat:
        d = 1 - d
    return float(d[m].sum()) / m_total


def e_pair(
    p: tuple[Image, LabelMask],
    q: tuple[Image, LabelMask],
    flow_pq: FlowField,
    flow_qp: FlowField,
    cfg: ConsistencyConfig | None = None,
) -> float:
    """Symmetric pairwise discrepancy between two frame/mask pairs.

    Each of the two terms warps one mask onto the other frame's grid via the
    flow toward the source, masks out pixels failing the forward-backward
    occlusion check, and averages the label disagreement over the remaining
    pixels. Lies in [0, 2]; 0 means the masks track the flow exactly.
    """
    cfg = cfg or ConsistencyConfig()
    _, mask_p = p
    _, mask_q = q
    for fl in (flow_pq, flow_qp):
        if (fl.height, fl.width) != (mask_p.height, mask_p.width):
            raise ValueError("flow dimensions do not match masks")
    term_on_q = _pair_term(mask_q, mask_p, flow_qp, flow_pq, cfg)
    term_on_p = _pair_term(mask_p, mask_q, flow_pq, flow_qp, cfg)
    return term_on_q + term_on_p


def count_boundary_pixels(mask: LabelMask) -> int:
    """Non-background pixels with a four-neighbor of a different label.

    The image border counts as a differing neighbor, so a full-frame object
    still has a perimeter.
    """
    padded = np.full((mask.height + 2, mask.width + 2), -1, dtype=np.int64)
    padded[1:-1, 1:-1] = mask.labels
    center = padded[1:-1, 1:-1]
    differs = (
        (padded[:-2, 1:-1] != center)
        | (padded[2:, 1:-1] != center)
        | (padded[1:-1, :-2] != center)
        | (padded[1:-1, 2:] != center)
    )
    return int(((center > 0) & differs).sum())


def _non_background_total(seq: VideoSequence) -> int:
    return int(sum((m.labels != 0).sum() for m in seq.masks))


def _boundary_median(seq: VideoSequence) -> float:
    return float(np.median([count_boundary_pixels(m) for m in seq.masks]))


def _normalization_constant(norm: Normalization, n_bd_median: float, n_nbg_total: int) -> float:
    if norm is Normalization.NONE:
        return 1.0
    if norm is Normalization.SQRT_NON_BACKGROUND:
        return float(np.sqrt(n_nbg_total))
    return n_bd_median


def e_cons(seq: VideoSequence, cfg: ConsistencyConfig | None = None) -> MeasureReport:
    """Video consistency: mean pairwise discrepancy over a temporal window.

    Averages :func:`e_pair` over all unordered frame pairs at distance
    1..window_k (exact pair count) and divides by the configured
    normalization constant.
    """
    cfg = cfg or ConsistencyConfig()
    t = seq.num_frames
    pairs = [(i, j) for i in range(t) for j in range(i + 1, min(i + cfg.window_k, t - 1) + 1)]
    if not pairs:
        raise ValueError("sequence has no frame pairs to measure")

    def term(pair: tuple[int, int]) -> float:
        i, j = pair
        return e_pair(
            (seq.frames[i], seq.masks[i]),
            (seq.frames[j], seq.masks[j]),
            seq.flow(i, j),
            seq.flow(j, i),
            cfg,
        )

    workers = min(worker_count(), len(pairs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(term, pairs))
    else:
        terms = [term(p) for p in pairs]

    n_bd_median = _boundary_median(seq)
    n_nbg_total = _non_background_total(seq)
    norm = _normalization_constant(cfg.normalization, n_bd_median, n_nbg_total)
    # Pairs are already sorted by (i, j); summing in that order keeps the
    # result independent of the worker count.
    numerator = float(np.sum(terms)) / len(pairs)
    if norm == 0.0:
        if numerator != 0.0:
            raise ValueError("normalization constant is zero with a nonzero numerator")
        value = 0.0
    else:
        value = numerator / norm
    return MeasureReport(
        e_cons=value,
        per_pair_terms=tuple((i, j, float(v)) for (i, j), v in zip(pairs, terms)),
        n_bd_median=n_bd_median,
        n_nbg_total=n_nbg_total,
        normalization=cfg.normalization,
    )


def e_smooth(seq: VideoSequence, sigma_seconds: float = 0.15, per_frame_nbd: bool = False) -> float:
    """Temporal smoothness: high-frequency content of the mask signal.

    One-hot encodes the masks, blurs along time with a Gaussian of
    ``sigma_seconds * fps`` frames, and accumulates the per-frame L2 norm of
    the residual, normalized by the boundary pixel count (median over frames
    by default, per-frame when ``per_frame_nbd``).
    """
    if seq.num_frames < 2:
        raise ValueError("smoothness requires at least 2 frames")
    if sigma_seconds <= 0:
        raise ValueError("sigma_seconds must be positive")
    volume = one_hot_volume(list(seq.masks))
    sigma_frames = sigma_seconds * seq.fps
    blurred = blur_along_time(volume.values.astype(np.float64), sigma_frames)
    residual = volume.values.astype(np.float64) - blurred
    per_frame = np.sqrt((residual**2).sum(axis=(1, 2, 3)))
    if per_frame_nbd:
        total = 0.0
        for t, num in enumerate(per_frame):
            nbd = count_boundary_pixels(seq.masks[t])
            if nbd == 0:
                if num > 1e-12:
                    raise ValueError(f"zero boundary count at frame {t} with nonzero numerator")
                continue
            total += num / nbd
        return float(total)
    nbd_median = _boundary_median(seq)
    numerator = float(per_frame.sum())
    if nbd_median == 0.0:
        if numerator > 1e-12:
            raise ValueError("zero boundary count with nonzero numerator")
        return 0.0
    return numerator / nbd_median


def iou(pred: LabelMask, gt: LabelMask, class_index: int) -> float:
    """Intersection over union for one class; 1.0 when both sets are empty."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError("mask dimensions do not match")
    p = pred.labels == class_index
    g = gt.labels == class_index
    union = int((p | g).sum())
    if union == 0:
        return 1.0
    return float((p & g).sum()) / union


def recall(pred: LabelMask, gt: LabelMask, class_index: int) -> float:
    """Fraction of ground-truth pixels recovered; 1.0 when gt is empty."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError("mask dimensions do not match")
    p = pred.labels == class_index
    g = gt.labels == class_index
    total = int(g.sum())
    if total == 0:
        return 1.0
    return float((p & g).sum()) / total
